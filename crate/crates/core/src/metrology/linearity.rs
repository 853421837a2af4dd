// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Static linearity: a staircase over every DAC code, read back once per
//! step after settling, reduced to DNL and endpoint-fit INL.

use crate::memory::{SampleCode, SequenceEntry, MIN_SEGMENT_WORDS};
use crate::protocol::{CaptureSpec, Client, Transport};
use crate::SAMPLES_PER_WORD;

use super::MetrologyError;

pub const CODES: usize = 1 << 16;
/// Code steps programmed per board run; 4096 steps of 4 words fill half the
/// waveform memory and the whole sequence memory.
pub const STEPS_PER_BATCH: usize = 4096;
pub const BATCHES: usize = CODES / STEPS_PER_BATCH;
pub const DEFAULT_DWELL_CYCLES: u32 = 64;
pub const DEFAULT_BOUND_LSB: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    /// Endpoint-fit step, volts.
    pub lsb: f64,
    /// One value per code transition (65535).
    pub dnl: Vec<f64>,
    /// One value per code (65536).
    pub inl: Vec<f64>,
    pub max_abs_dnl: f64,
    pub max_abs_inl: f64,
}

impl LinearityReport {
    pub fn codes(&self) -> usize {
        self.inl.len()
    }

    pub fn transitions(&self) -> usize {
        self.dnl.len()
    }

    pub fn passes(&self, bound_lsb: f64) -> bool {
        self.max_abs_inl <= bound_lsb && self.max_abs_dnl <= bound_lsb
    }

    /// `code,volts,inl_lsb,dnl_lsb`; the last code has no DNL.
    pub fn to_csv(&self, volts: &[f64]) -> String {
        let mut s = String::with_capacity(self.inl.len() * 48);
        s.push_str("code,volts,inl_lsb,dnl_lsb\n");
        for (k, inl) in self.inl.iter().enumerate() {
            let code = k as i64 - 32768;
            let v = volts.get(k).copied().unwrap_or(f64::NAN);
            match self.dnl.get(k) {
                Some(d) => s.push_str(&format!("{code},{v:.12e},{inl:.9},{d:.9}\n")),
                None => s.push_str(&format!("{code},{v:.12e},{inl:.9},\n")),
            }
        }
        s
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// DNL and endpoint-fit INL from one reading per code, lowest code first.
pub fn compute_inl_dnl(volts: &[f64]) -> Result<LinearityReport, MetrologyError> {
    if volts.len() != CODES {
        return Err(MetrologyError::WrongLength {
            expected: CODES,
            got: volts.len(),
        });
    }
    let n = CODES - 1;
    let lsb = (volts[n] - volts[0]) / n as f64;
    let dnl: Vec<f64> = volts
        .windows(2)
        .map(|w| (w[1] - w[0]) / lsb - 1.0)
        .collect();
    let inl: Vec<f64> = volts
        .iter()
        .enumerate()
        .map(|(k, v)| (v - (volts[0] + k as f64 * lsb)) / lsb)
        .collect();
    Ok(LinearityReport {
        lsb,
        max_abs_dnl: max_abs(&dnl),
        max_abs_inl: max_abs(&inl),
        dnl,
        inl,
    })
}

/// Endpoint-fit INL, in LSB of the fitted line, of a converter whose code
/// `k` lands at `k + profile[k]` ideal LSB.
pub fn endpoint_fit(profile: &[f64]) -> Vec<f64> {
    let n = profile.len().saturating_sub(1).max(1) as f64;
    let (first, last) = (profile[0], profile[profile.len() - 1]);
    let gain = 1.0 + (last - first) / n;
    profile
        .iter()
        .enumerate()
        .map(|(k, p)| (p - first - k as f64 * (last - first) / n) / gain)
        .collect()
}

/// Waveform image and program for batch `b`: steps of
/// `MIN_SEGMENT_WORDS` words, each repeated to fill `dwell` cycles.
pub fn staircase_batch(
    batch: usize,
    dwell: u32,
) -> Result<(Vec<SampleCode>, Vec<SequenceEntry>), MetrologyError> {
    if dwell == 0 || dwell % MIN_SEGMENT_WORDS != 0 {
        return Err(MetrologyError::BadDwell(dwell));
    }
    let step_samples = MIN_SEGMENT_WORDS as usize * SAMPLES_PER_WORD;
    let first = batch * STEPS_PER_BATCH;
    let mut samples = Vec::with_capacity(STEPS_PER_BATCH * step_samples);
    let mut entries = Vec::with_capacity(STEPS_PER_BATCH);
    for i in 0..STEPS_PER_BATCH {
        let code = (first + i) as i32 - 32768;
        samples.extend(std::iter::repeat_n(code as SampleCode, step_samples));
        entries.push(
            SequenceEntry::segment(i as u32 * MIN_SEGMENT_WORDS, MIN_SEGMENT_WORDS)
                .with_counter(dwell / MIN_SEGMENT_WORDS),
        );
    }
    let last = entries.last_mut().unwrap();
    *last = last.end();
    Ok((samples, entries))
}

/// Steps the board's DAC through all codes in ascending order and reads the
/// settled output once per step through the capture unit. The channel must
/// be idle.
pub fn ramp_sweep<T: Transport>(
    client: &mut Client<T>,
    channel: u8,
    dwell: u32,
) -> Result<Vec<f64>, MetrologyError> {
    let step_samples = dwell * SAMPLES_PER_WORD as u32;
    let mut volts = Vec::with_capacity(CODES);
    for b in 0..BATCHES {
        let (samples, entries) = staircase_batch(b, dwell)?;
        client.write_wdm(channel, 0, &samples)?;
        client.write_sdm(channel, 0, &entries)?;
        client.arm_capture(CaptureSpec::volts(
            channel,
            step_samples - 1,
            step_samples,
            STEPS_PER_BATCH as u32,
        ))?;
        client.arm(channel)?;
        client.advance(STEPS_PER_BATCH as u64 * dwell as u64)?;
        let got = client.capture_count()? as usize;
        if got != STEPS_PER_BATCH {
            return Err(MetrologyError::ShortCapture {
                expected: STEPS_PER_BATCH,
                got,
            });
        }
        volts.extend(client.read_capture_volts(STEPS_PER_BATCH as u32)?);
    }
    Ok(volts)
}
