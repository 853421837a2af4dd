// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Coherent single-tone spectra and SFDR.
//!
//! Records are analysed with a rectangular window, so the tone must sit
//! exactly on a bin. The sweep places each nominal frequency on the nearest
//! odd bin of a 4096-point record: an odd bin is coprime with the record
//! length, so every sample phase is visited once and quantization error does
//! not fold back onto a few harmonics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::memory::{SampleCode, SequenceEntry};
use crate::protocol::{CaptureSpec, Client, Transport};
use crate::{SAMPLES_PER_WORD, SAMPLE_RATE_HZ};

use super::MetrologyError;

pub const SFDR_RECORD: usize = 4096;
pub const SWEEP_START_HZ: f64 = 10e6;
pub const SWEEP_STEP_HZ: f64 = 10e6;
pub const SWEEP_POINTS: usize = 25;
pub const FULL_SCALE_AMPLITUDE: f64 = 32767.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfdrPoint {
    pub nominal_hz: f64,
    /// Frequency actually played (bin-aligned).
    pub frequency_hz: f64,
    pub bin: usize,
    pub sfdr_dbc: f64,
}

/// One-sided power `|X_k|^2`, `k = 0..=N/2`.
pub fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Bin index of `f0` in an `n`-point record, if it is an integer.
pub fn coherent_bin(n: usize, sample_rate: f64, f0: f64) -> Result<usize, MetrologyError> {
    let x = f0 * n as f64 / sample_rate;
    let k = x.round();
    if (x - k).abs() > 1e-9 * x.max(1.0) || k < 1.0 || k >= (n / 2) as f64 {
        return Err(MetrologyError::NonCoherent { f0, n });
    }
    Ok(k as usize)
}

/// Odd bin closest to `f`; ties go to the lower bin.
pub fn nearest_odd_bin(f: f64, n: usize, sample_rate: f64) -> usize {
    let x = f * n as f64 / sample_rate;
    let below = (2.0 * ((x - 1.0) / 2.0).floor() + 1.0).max(1.0);
    let k = if x - below <= below + 2.0 - x {
        below
    } else {
        below + 2.0
    };
    k as usize
}

/// Carrier power over the largest other non-DC bin, dB. Infinite when no
/// other bin carries power.
pub fn compute_sfdr(volts: &[f64], sample_rate: f64, f0: f64) -> Result<f64, MetrologyError> {
    let n = volts.len();
    if !n.is_power_of_two() || n < 4 {
        return Err(MetrologyError::NotPowerOfTwo(n));
    }
    let bin = coherent_bin(n, sample_rate, f0)?;
    let p = power_spectrum(volts);
    let spur = p
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != 0 && k != bin)
        .fold(0.0f64, |m, (_, &v)| m.max(v));
    if spur == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p[bin] / spur).log10())
}

/// `round(amplitude * sin(2 pi bin k / n + phase))`.
pub fn sine_codes(n: usize, bin: usize, amplitude: f64, phase: f64) -> Vec<SampleCode> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * ((bin * k) % n) as f64 / n as f64 + phase;
            (amplitude * t.sin()).round().clamp(-32768.0, 32767.0) as SampleCode
        })
        .collect()
}

pub fn sweep_frequencies() -> Vec<f64> {
    (0..SWEEP_POINTS)
        .map(|i| SWEEP_START_HZ + SWEEP_STEP_HZ * i as f64)
        .collect()
}

/// One tone played through the board and captured.
#[derive(Debug, Clone, PartialEq)]
pub struct SfdrTrace {
    pub point: SfdrPoint,
    pub volts: Vec<f64>,
}

/// Plays one bin-aligned tone per sweep frequency and measures its SFDR.
/// The channel must be idle.
pub fn sfdr_sweep<T: Transport>(
    client: &mut Client<T>,
    channel: u8,
    amplitude: f64,
) -> Result<Vec<SfdrTrace>, MetrologyError> {
    let words = (SFDR_RECORD / SAMPLES_PER_WORD) as u32;
    let mut out = Vec::with_capacity(SWEEP_POINTS);
    for nominal in sweep_frequencies() {
        let bin = nearest_odd_bin(nominal, SFDR_RECORD, SAMPLE_RATE_HZ);
        let frequency = bin as f64 * SAMPLE_RATE_HZ / SFDR_RECORD as f64;
        client.write_wdm(channel, 0, &sine_codes(SFDR_RECORD, bin, amplitude, 0.0))?;
        client.write_sdm(
            channel,
            0,
            &[SequenceEntry::segment(0, words).with_counter(0)],
        )?;
        client.arm_capture(CaptureSpec::volts(channel, 0, 1, SFDR_RECORD as u32))?;
        client.arm(channel)?;
        client.advance(words as u64)?;
        client.stop(channel)?;
        let volts = client.read_capture_volts(SFDR_RECORD as u32)?;
        let sfdr = compute_sfdr(&volts, SAMPLE_RATE_HZ, frequency)?;
        out.push(SfdrTrace {
            point: SfdrPoint {
                nominal_hz: nominal,
                frequency_hz: frequency,
                bin,
                sfdr_dbc: sfdr,
            },
            volts,
        });
    }
    Ok(out)
}

pub fn sfdr_csv(points: &[SfdrPoint]) -> String {
    let mut s = String::from("nominal_hz,frequency_hz,bin,sfdr_dbc\n");
    for p in points {
        s.push_str(&format!(
            "{:.0},{:.3},{},{:.6}\n",
            p.nominal_hz, p.frequency_hz, p.bin, p.sfdr_dbc
        ));
    }
    s
}
