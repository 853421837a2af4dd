// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Phase noise of a jittered tone and its carrier-frequency scaling.
//!
//! A coherent tone is played through the sequencer and DAC; each sample is
//! time-stamped by the channel clock. An analyzer on an ideal clock sees,
//! to first order, `y_k = v_k - tau_k * v'(t_k)` where `tau_k` is the
//! sample's timing error and `v'` the derivative of the band-limited
//! reconstruction. Sideband power relative to the carrier, per hertz, is
//! averaged over records and over a band around each offset.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::frontend::{ChannelClock, DacTransfer, TimingModel};
use crate::memory::{SequenceEntry, SequenceMemory, WaveformMemory};
use crate::sequencer::{run_for, TriggerSchedule};
use crate::{SAMPLES_PER_WORD, SAMPLE_PERIOD_S, SAMPLE_RATE_HZ};

use super::spectrum::{coherent_bin, sine_codes};
use super::MetrologyError;

/// Record length giving 100 kHz bins at 2 GSPS.
pub const RECORD: usize = 20_000;
pub const DEFAULT_RECORDS: usize = 16;
pub const DEFAULT_OFFSETS_HZ: [f64; 7] = [2e6, 3e6, 5e6, 10e6, 20e6, 30e6, 50e6];
/// Each offset is averaged over `[offset / BAND, offset * BAND]`.
const BAND: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseCurve {
    pub carrier_hz: f64,
    pub offsets_hz: Vec<f64>,
    /// Single-sideband noise relative to the carrier, dBc/Hz.
    pub dbc_hz: Vec<f64>,
}

impl PhaseNoiseCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("carrier_hz,offset_hz,dbc_hz\n");
        for (o, l) in self.offsets_hz.iter().zip(&self.dbc_hz) {
            s.push_str(&format!("{:.0},{:.0},{:.6}\n", self.carrier_hz, o, l));
        }
        s
    }
}

/// White sample-timing jitter of standard deviation `sigma` seconds puts a
/// flat floor of `2 (2 pi f sigma)^2 / fs` under the carrier.
pub fn analytic_phase_noise(
    carrier_hz: f64,
    sigma: f64,
    sample_rate: f64,
    offsets_hz: &[f64],
) -> PhaseNoiseCurve {
    let w = 2.0 * std::f64::consts::PI * carrier_hz * sigma;
    let level = 10.0 * (2.0 * w * w / sample_rate).log10();
    PhaseNoiseCurve {
        carrier_hz,
        offsets_hz: offsets_hz.to_vec(),
        dbc_hz: vec![level; offsets_hz.len()],
    }
}

/// Mean vertical distance of `b` above `a`, dB.
pub fn phase_noise_scaling_check(
    a: &PhaseNoiseCurve,
    b: &PhaseNoiseCurve,
) -> Result<f64, MetrologyError> {
    if a.offsets_hz.is_empty() || a.offsets_hz != b.offsets_hz || a.dbc_hz.len() != b.dbc_hz.len() {
        return Err(MetrologyError::MismatchedGrids);
    }
    let n = a.dbc_hz.len() as f64;
    Ok(a.dbc_hz
        .iter()
        .zip(&b.dbc_hz)
        .map(|(x, y)| y - x)
        .sum::<f64>()
        / n)
}

/// Plays a full-scale tone at `carrier_hz` for `records` back-to-back
/// records and estimates its phase noise at `offsets_hz`.
pub fn measure_phase_noise(
    carrier_hz: f64,
    timing: TimingModel,
    records: usize,
    offsets_hz: &[f64],
) -> Result<PhaseNoiseCurve, MetrologyError> {
    let n = RECORD;
    let bin = coherent_bin(n, SAMPLE_RATE_HZ, carrier_hz)?;
    let df = SAMPLE_RATE_HZ / n as f64;
    let words = (n / SAMPLES_PER_WORD) as u32;
    let mut wdm = WaveformMemory::new(0);
    wdm.load_waveform(0, &sine_codes(n, bin, 32767.0, 0.0))
        .map_err(|_| MetrologyError::WrongLength {
            expected: n,
            got: n,
        })?;
    let sdm =
        SequenceMemory::from_entries(0, vec![SequenceEntry::segment(0, words).with_counter(0)])
            .expect("one entry");
    let (stream, _) = run_for(
        &sdm,
        &wdm,
        &TriggerSchedule::none(),
        words as u64 * records as u64,
    )?;

    let dac = DacTransfer::ideal().lut();
    let mut clock = ChannelClock::new(timing)?;
    let latency = timing.latency();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut power = vec![0.0; n];
    let omega: Vec<f64> = (0..n)
        .map(|m| {
            let s = if m < n / 2 {
                m as f64
            } else if m == n / 2 {
                0.0
            } else {
                m as f64 - n as f64
            };
            2.0 * std::f64::consts::PI * s * df
        })
        .collect();
    let rec_words = n / SAMPLES_PER_WORD;
    for r in 0..records {
        let words = &stream[r * rec_words..(r + 1) * rec_words];
        let trace = clock.timestamp(words, &dac, 0.0);
        let tau: Vec<f64> = trace
            .times
            .iter()
            .enumerate()
            .map(|(k, t)| t - latency - k as f64 * SAMPLE_PERIOD_S)
            .collect();
        let mut bins: Vec<Complex<f64>> =
            trace.volts.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut bins);
        let mut deriv: Vec<Complex<f64>> = bins
            .iter()
            .zip(&omega)
            .map(|(x, w)| x * Complex::new(0.0, *w))
            .collect();
        inv.process(&mut deriv);
        let mut y: Vec<Complex<f64>> = trace
            .volts
            .iter()
            .zip(&deriv)
            .zip(&tau)
            .map(|((v, d), t)| Complex::new(v - t * d.re / n as f64, 0.0))
            .collect();
        fwd.process(&mut y);
        for (p, c) in power.iter_mut().zip(&y) {
            *p += c.norm_sqr();
        }
    }
    let carrier = power[bin];
    let dbc_hz = offsets_hz
        .iter()
        .map(|&off| {
            let lo = ((off / BAND) / df).ceil() as usize;
            let hi = ((off * BAND) / df).floor() as usize;
            let mut acc = 0.0;
            let mut count = 0usize;
            for m in lo.max(1)..=hi {
                for k in [bin + m, bin.wrapping_sub(m)] {
                    if k > 0 && k < n / 2 {
                        acc += power[k];
                        count += 1;
                    }
                }
            }
            10.0 * (acc / count.max(1) as f64 / carrier / df).log10()
        })
        .collect();
    Ok(PhaseNoiseCurve {
        carrier_hz,
        offsets_hz: offsets_hz.to_vec(),
        dbc_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_doubling_is_twenty_log_two() {
        let a = analytic_phase_noise(100e6, 10e-12, 2e9, &DEFAULT_OFFSETS_HZ);
        let b = analytic_phase_noise(200e6, 10e-12, 2e9, &DEFAULT_OFFSETS_HZ);
        let shift = phase_noise_scaling_check(&a, &b).unwrap();
        assert!((shift - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn grids_must_match() {
        let a = analytic_phase_noise(100e6, 1e-12, 2e9, &[1e6, 2e6]);
        let b = analytic_phase_noise(100e6, 1e-12, 2e9, &[1e6, 3e6]);
        assert!(matches!(
            phase_noise_scaling_check(&a, &b),
            Err(MetrologyError::MismatchedGrids)
        ));
    }

    #[test]
    fn measured_floor_tracks_the_analytic_level() {
        let timing = TimingModel {
            jitter_sigma: 10e-12,
            rng_seed: 3,
            ..Default::default()
        };
        let m = measure_phase_noise(100e6, timing, 4, &DEFAULT_OFFSETS_HZ).unwrap();
        let a = analytic_phase_noise(100e6, 10e-12, 2e9, &DEFAULT_OFFSETS_HZ);
        for (x, y) in m.dbc_hz.iter().zip(&a.dbc_hz) {
            assert!((x - y).abs() < 1.5, "{x} vs {y}");
        }
    }

    #[test]
    fn off_bin_carrier_is_rejected() {
        let r = measure_phase_noise(100.05e6, TimingModel::default(), 1, &DEFAULT_OFFSETS_HZ);
        assert!(matches!(r, Err(MetrologyError::NonCoherent { .. })));
    }
}
