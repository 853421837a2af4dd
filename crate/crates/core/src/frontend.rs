// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! DAC transfer law, output stage, IQ plate and output timing.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::memory::SampleCode;
use crate::sequencer::SampleWord;
use crate::{SAMPLES_PER_WORD, SAMPLE_PERIOD_S, SAMPLE_RATE_HZ, WORD_PERIOD_S};

pub const DAC_CODES: usize = 1 << 16;
pub const DEFAULT_FULLSCALE_V: f64 = 0.5;
pub const DEFAULT_CUTOFF_HZ: f64 = 500.0e6;
pub const DEFAULT_FIR_TAPS: usize = 63;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontendError {
    #[error("INL profile must have {DAC_CODES} entries, got {0}")]
    ProfileLength(usize),
    #[error("jitter sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
}

#[inline]
fn code_index(code: SampleCode) -> usize {
    (code as i32 + 32768) as usize
}

/// Static DAC transfer: `v = v_fs * (code + inl[code]) / 32768`, with the
/// INL profile in LSB.
#[derive(Debug, Clone, PartialEq)]
pub struct DacTransfer {
    v_fullscale: f64,
    inl_profile: Vec<f64>,
}

impl Default for DacTransfer {
    fn default() -> Self {
        Self::ideal()
    }
}

impl DacTransfer {
    pub fn ideal() -> Self {
        DacTransfer {
            v_fullscale: DEFAULT_FULLSCALE_V,
            inl_profile: vec![0.0; DAC_CODES],
        }
    }

    pub fn with_profile(v_fullscale: f64, inl_profile: Vec<f64>) -> Result<Self, FrontendError> {
        if inl_profile.len() != DAC_CODES {
            return Err(FrontendError::ProfileLength(inl_profile.len()));
        }
        Ok(DacTransfer {
            v_fullscale,
            inl_profile,
        })
    }

    pub fn v_fullscale(&self) -> f64 {
        self.v_fullscale
    }

    /// Ideal code step in volts.
    pub fn lsb(&self) -> f64 {
        self.v_fullscale / 32768.0
    }

    pub fn inl_profile(&self) -> &[f64] {
        &self.inl_profile
    }

    #[inline]
    pub fn convert(&self, code: SampleCode) -> f64 {
        dac_convert(code, self)
    }

    /// Voltage for every code, indexed by `code + 32768`.
    pub fn lut(&self) -> DacLut {
        DacLut {
            volts: (i16::MIN..=i16::MAX).map(|c| self.convert(c)).collect(),
        }
    }
}

pub fn dac_convert(code: SampleCode, transfer: &DacTransfer) -> f64 {
    transfer.v_fullscale * (code as f64 + transfer.inl_profile[code_index(code)]) / 32768.0
}

/// Precomputed transfer table.
#[derive(Debug, Clone, PartialEq)]
pub struct DacLut {
    volts: Vec<f64>,
}

impl DacLut {
    #[inline]
    pub fn convert(&self, code: SampleCode) -> f64 {
        self.volts[code_index(code)]
    }

    pub fn convert_words(&self, words: &[SampleWord]) -> Vec<f64> {
        let mut out = Vec::with_capacity(words.len() * SAMPLES_PER_WORD);
        for w in words {
            out.extend(w.samples.iter().map(|&c| self.convert(c)));
        }
        out
    }
}

/// INL profile generators, in LSB, indexed by `code + 32768`.
pub mod profiles {
    use super::*;

    pub fn ideal() -> Vec<f64> {
        vec![0.0; DAC_CODES]
    }

    /// Independent uniform offsets in `[-bound, bound]`; both endpoints are
    /// pinned to zero so the endpoint line is the ideal line.
    pub fn random_bounded(bound: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Vec<f64> = (0..DAC_CODES)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        p[0] = 0.0;
        p[DAC_CODES - 1] = 0.0;
        p
    }

    /// Half-sine bow peaking at `peak` LSB mid-scale, zero at both ends.
    pub fn bow(peak: f64) -> Vec<f64> {
        let n = (DAC_CODES - 1) as f64;
        (0..DAC_CODES)
            .map(|k| peak * (PI * k as f64 / n).sin())
            .collect()
    }

    /// Smooth profile built from a few random harmonics of the bow, scaled
    /// so that its largest magnitude is exactly `bound`.
    pub fn smooth_random(bound: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64)> = (1..=6)
            .map(|h| (h as f64, rng.random_range(-1.0..1.0) / h as f64))
            .collect();
        let n = (DAC_CODES - 1) as f64;
        let raw: Vec<f64> = (0..DAC_CODES)
            .map(|k| {
                let x = k as f64 / n;
                terms.iter().map(|(h, a)| a * (PI * h * x).sin()).sum()
            })
            .collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        raw.into_iter().map(|v| v * bound / peak).collect()
    }

    /// Memoryless distortion that puts an `order`-th harmonic at `level_dbc`
    /// below a sine of `amplitude` codes. Uses a Chebyshev polynomial so a
    /// full-scale tone maps onto a single harmonic line.
    pub fn harmonic(order: u32, level_dbc: f64, amplitude: f64) -> Vec<f64> {
        let a = amplitude / 32768.0;
        // T_n(a sin t) has an n-th harmonic of amplitude a^n (for odd n).
        let ratio = 10f64.powf(level_dbc / 20.0);
        let coeff = ratio * amplitude / a.powi(order as i32);
        (0..DAC_CODES)
            .map(|k| {
                let x = (k as f64 - 32768.0) / 32768.0;
                coeff * chebyshev(order, x)
            })
            .collect()
    }

    fn chebyshev(n: u32, x: f64) -> f64 {
        let (mut t0, mut t1) = (1.0, x);
        if n == 0 {
            return t0;
        }
        for _ in 1..n {
            let t2 = 2.0 * x * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    }
}

/// Splits a single-ended level into the differential pair.
pub fn differential_outputs(v: f64) -> (f64, f64) {
    (v / 2.0, -v / 2.0)
}

/// Linear-phase FIR reconstruction filter (Blackman windowed sinc,
/// unity DC gain).
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn lowpass(cutoff_hz: f64, sample_rate: f64, n_taps: usize) -> Self {
        let n_taps = n_taps | 1;
        let fc = cutoff_hz / sample_rate;
        let mid = (n_taps / 2) as f64;
        let mut taps: Vec<f64> = (0..n_taps)
            .map(|i| {
                let m = i as f64 - mid;
                let sinc = if m == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * m).sin() / (PI * m)
                };
                let w = 0.42 - 0.5 * (2.0 * PI * i as f64 / (n_taps - 1) as f64).cos()
                    + 0.08 * (4.0 * PI * i as f64 / (n_taps - 1) as f64).cos();
                sinc * w
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        FirFilter { taps }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay in samples.
    pub fn delay(&self) -> usize {
        self.taps.len() / 2
    }

    /// Causal convolution from a zero initial state; output has the input's
    /// length.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        (0..input.len())
            .map(|n| {
                self.taps
                    .iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(k, t)| t * input[n - k])
                    .sum()
            })
            .collect()
    }
}

impl Default for FirFilter {
    fn default() -> Self {
        FirFilter::lowpass(DEFAULT_CUTOFF_HZ, SAMPLE_RATE_HZ, DEFAULT_FIR_TAPS)
    }
}

/// Low-pass a 2 GSPS voltage stream with the default tap count.
pub fn lowpass_filter(samples: &[f64], cutoff_hz: f64) -> Vec<f64> {
    FirFilter::lowpass(cutoff_hz, SAMPLE_RATE_HZ, DEFAULT_FIR_TAPS).apply(samples)
}

/// Mixer imbalance knobs; zero for an ideal mixer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IqImbalance {
    /// Relative Q-path gain error.
    pub gain: f64,
    /// Q-path LO phase error, radians.
    pub phase_rad: f64,
}

/// Four IQ mixers fed from one LO through a power splitter.
#[derive(Debug, Clone, PartialEq)]
pub struct IqPlate {
    pub lo_frequency: f64,
    /// LO drive level. The ideal mixer's conversion gain does not depend on it.
    pub lo_amplitude: f64,
    pub imbalance: IqImbalance,
}

impl IqPlate {
    pub const SPLITTER_PORTS: usize = 4;

    pub fn new(lo_frequency: f64, lo_amplitude: f64) -> Self {
        IqPlate {
            lo_frequency,
            lo_amplitude,
            imbalance: IqImbalance::default(),
        }
    }

    /// LO phase seen at each splitter port; identical for all four.
    pub fn port_phase(&self, _port: usize) -> f64 {
        0.0
    }
}

pub fn iq_upconvert(i: f64, q: f64, plate: &IqPlate, t: f64) -> f64 {
    let theta = 2.0 * PI * plate.lo_frequency * t;
    let imb = plate.imbalance;
    i * theta.cos() - (1.0 + imb.gain) * q * (theta + imb.phase_rad).sin()
}

/// Upconverts sample streams taken at `sample_rate` starting at `t0`.
pub fn iq_upconvert_stream(
    i: &[f64],
    q: &[f64],
    plate: &IqPlate,
    t0: f64,
    sample_rate: f64,
) -> Vec<f64> {
    i.iter()
        .zip(q)
        .enumerate()
        .map(|(k, (&i, &q))| iq_upconvert(i, q, plate, t0 + k as f64 / sample_rate))
        .collect()
}

/// Output timing of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    /// Deterministic digital-to-analog latency in word cycles.
    pub pipeline_delay: u32,
    /// Static offset of this channel, seconds.
    pub channel_skew: f64,
    /// Per-sample Gaussian timing noise, seconds.
    pub jitter_sigma: f64,
    pub rng_seed: u64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            pipeline_delay: 2,
            channel_skew: 0.0,
            jitter_sigma: 0.0,
            rng_seed: 0,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<(), FrontendError> {
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(FrontendError::BadSigma(self.jitter_sigma));
        }
        Ok(())
    }

    /// Time of stream sample 0 before jitter.
    pub fn latency(&self) -> f64 {
        self.pipeline_delay as f64 * WORD_PERIOD_S + self.channel_skew
    }
}

/// Timed voltage samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalogTrace {
    pub times: Vec<f64>,
    pub volts: Vec<f64>,
}

impl AnalogTrace {
    pub fn len(&self) -> usize {
        self.volts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volts.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,volts\n");
        for (t, v) in self.times.iter().zip(&self.volts) {
            out.push_str(&format!("{t:e},{v:e}\n"));
        }
        out
    }

    /// `(time, volts)` pairs of little-endian f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (t, v) in self.times.iter().zip(&self.volts) {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() % 16 != 0 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "trace length not a multiple of 16",
            ));
        }
        let mut trace = AnalogTrace::default();
        for pair in bytes.chunks_exact(16) {
            trace
                .times
                .push(f64::from_le_bytes(pair[..8].try_into().unwrap()));
            trace
                .volts
                .push(f64::from_le_bytes(pair[8..].try_into().unwrap()));
        }
        Ok(trace)
    }
}

/// Stateful sample clock of one channel. Jitter draws continue across calls
/// so successive bursts see independent noise.
#[derive(Debug, Clone)]
pub struct ChannelClock {
    timing: TimingModel,
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl ChannelClock {
    pub fn new(timing: TimingModel) -> Result<Self, FrontendError> {
        timing.validate()?;
        let normal =
            (timing.jitter_sigma > 0.0).then(|| Normal::new(0.0, timing.jitter_sigma).unwrap());
        Ok(ChannelClock {
            timing,
            rng: ChaCha8Rng::seed_from_u64(timing.rng_seed),
            normal,
        })
    }

    pub fn timing(&self) -> &TimingModel {
        &self.timing
    }

    #[inline]
    pub fn jitter(&mut self) -> f64 {
        match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    /// Time stamp of stream sample `k` for a stream starting at
    /// `trigger_time`.
    #[inline]
    pub fn stamp(&mut self, trigger_time: f64, k: usize) -> f64 {
        trigger_time + self.timing.latency() + k as f64 * SAMPLE_PERIOD_S + self.jitter()
    }

    pub fn timestamp(
        &mut self,
        words: &[SampleWord],
        dac: &DacLut,
        trigger_time: f64,
    ) -> AnalogTrace {
        let n = words.len() * SAMPLES_PER_WORD;
        let mut trace = AnalogTrace {
            times: Vec::with_capacity(n),
            volts: Vec::with_capacity(n),
        };
        let base = trigger_time + self.timing.latency();
        for (k, code) in words.iter().flat_map(|w| w.samples).enumerate() {
            trace
                .times
                .push(base + k as f64 * SAMPLE_PERIOD_S + self.jitter());
            trace.volts.push(dac.convert(code));
        }
        trace
    }
}

/// Stamps a word stream once, with a generator freshly seeded from
/// `timing.rng_seed`.
pub fn timestamp_samples(
    words: &[SampleWord],
    timing: &TimingModel,
    dac: &DacTransfer,
    trigger_time: f64,
) -> Result<AnalogTrace, FrontendError> {
    Ok(ChannelClock::new(*timing)?.timestamp(words, &dac.lut(), trigger_time))
}
