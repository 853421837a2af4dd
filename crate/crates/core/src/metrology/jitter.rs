// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Edge-time statistics across channels.

use crate::frontend::DacTransfer;
use crate::memory::{SequenceEntry, SequenceMemory, TriggerSource, WaveformMemory};
use crate::sync::{run_array, BoardTopology, ChannelProgram};
use crate::SAMPLES_PER_WORD;

use super::MetrologyError;

const PS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct JitterReport {
    pub events: usize,
    /// Population standard deviation of each channel's edge offsets, ps.
    pub std_ps: Vec<f64>,
    /// `skew_ps[i][j]` = mean of (edge_i - edge_j), ps.
    pub skew_ps: Vec<Vec<f64>>,
    pub mean_std_ps: f64,
    pub min_std_ps: f64,
    pub max_std_ps: f64,
}

impl JitterReport {
    pub fn channels(&self) -> usize {
        self.std_ps.len()
    }

    pub fn max_abs_skew_ps(&self) -> f64 {
        self.skew_ps
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn std_csv(&self) -> String {
        let mut s = String::from("channel,std_ps\n");
        for (i, v) in self.std_ps.iter().enumerate() {
            s.push_str(&format!("{i},{v:.6}\n"));
        }
        s
    }

    pub fn skew_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.skew_ps {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Statistics of per-event edge offsets (seconds), one list per channel,
/// indexed by event.
pub fn jitter_statistics(offsets: &[Vec<f64>]) -> Result<JitterReport, MetrologyError> {
    let events = offsets.first().map_or(0, Vec::len);
    for (channel, o) in offsets.iter().enumerate() {
        if o.len() < 2 {
            return Err(MetrologyError::TooFewEvents {
                channel,
                events: o.len(),
            });
        }
        if o.len() != events {
            return Err(MetrologyError::MismatchedEvents {
                channel,
                expected: events,
                got: o.len(),
            });
        }
    }
    // centre on each channel's first event to keep the sums small
    let centred: Vec<(f64, Vec<f64>)> = offsets
        .iter()
        .map(|o| (o[0], o.iter().map(|t| (t - o[0]) * PS).collect()))
        .collect();
    let n = events as f64;
    let std_ps: Vec<f64> = centred
        .iter()
        .map(|(_, c)| {
            let mean = c.iter().sum::<f64>() / n;
            (c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect();
    let means: Vec<f64> = centred
        .iter()
        .map(|(base, c)| base * PS + c.iter().sum::<f64>() / n)
        .collect();
    let skew_ps = means
        .iter()
        .map(|a| means.iter().map(|b| a - b).collect())
        .collect();
    let k = std_ps.len().max(1) as f64;
    Ok(JitterReport {
        events,
        mean_std_ps: std_ps.iter().sum::<f64>() / k,
        min_std_ps: std_ps.iter().copied().fold(f64::INFINITY, f64::min),
        max_std_ps: std_ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std_ps,
        skew_ps,
    })
}

/// Edge time minus event time, pairwise.
pub fn edge_offsets(edges: &[f64], events: &[f64]) -> Result<Vec<f64>, MetrologyError> {
    if edges.len() != events.len() {
        return Err(MetrologyError::MismatchedEvents {
            channel: 0,
            expected: events.len(),
            got: edges.len(),
        });
    }
    Ok(edges.iter().zip(events).map(|(e, t)| e - t).collect())
}

/// High level of the test pulse.
pub const PULSE_CODE: i16 = 16384;
const PULSE_WORDS: u32 = 4;

/// A channel that answers each external trigger with a 2-word pulse.
pub fn pulse_program(channel: u8) -> ChannelProgram {
    let mut wdm = WaveformMemory::new(channel);
    let mut samples = vec![PULSE_CODE; 2 * SAMPLES_PER_WORD];
    samples.resize(PULSE_WORDS as usize * SAMPLES_PER_WORD, 0);
    wdm.load_waveform(0, &samples).expect("fits");
    let sdm = SequenceMemory::from_entries(
        channel,
        vec![SequenceEntry::segment(0, PULSE_WORDS)
            .wait_for(TriggerSource::External)
            .jump_to(0)],
    )
    .expect("fits");
    ChannelProgram {
        sdm,
        wdm,
        dac: DacTransfer::ideal(),
    }
}

/// Settings of the array jitter measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayJitterConfig {
    pub events: usize,
    /// Cycles between trigger events (at least 8 so each pulse completes).
    pub spacing_cycles: u64,
    pub threads: usize,
}

impl Default for ArrayJitterConfig {
    fn default() -> Self {
        ArrayJitterConfig {
            events: 10_000,
            spacing_cycles: 8,
            threads: 0,
        }
    }
}

/// Global trigger times, each in the middle of a word-clock period so that
/// sub-nanosecond fan-out differences do not change the capture cycle.
pub fn event_times(topo: &BoardTopology, cfg: &ArrayJitterConfig) -> Vec<f64> {
    let t = topo.word_period();
    (0..cfg.events)
        .map(|e| (4 + e as u64 * cfg.spacing_cycles) as f64 * t + t / 2.0)
        .collect()
}

/// Triggers every channel of the array `cfg.events` times and measures the
/// rising edge of each answering pulse.
pub fn measure_array_jitter(
    topo: &BoardTopology,
    cfg: &ArrayJitterConfig,
) -> Result<JitterReport, MetrologyError> {
    let threads = if cfg.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cfg.threads
    };
    let programs: Vec<ChannelProgram> = topo
        .channels()
        .map(|id| pulse_program(id.channel as u8))
        .collect();
    let refs: Vec<&ChannelProgram> = programs.iter().collect();
    let events = event_times(topo, cfg);
    let n_cycles = 4 + cfg.events as u64 * cfg.spacing_cycles.max(8) + 16;
    let run = run_array(topo, &refs, &events, n_cycles, threads)?;
    let threshold = DacTransfer::ideal().convert(PULSE_CODE) / 2.0;
    let edges = run.rising_edges(&refs, threshold, threads)?;
    let offsets = edges
        .iter()
        .enumerate()
        .map(|(channel, e)| {
            edge_offsets(e, &events).map_err(|_| MetrologyError::MismatchedEvents {
                channel,
                expected: events.len(),
                got: e.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    jitter_statistics(&offsets)
}

/// Skew matrix implied by the configured channel skews, ps.
pub fn expected_skew_ps(topo: &BoardTopology) -> Vec<Vec<f64>> {
    let s: Vec<f64> = topo
        .channels()
        .map(|id| topo.channel(id).skew * PS)
        .collect();
    s.iter()
        .map(|a| s.iter().map(|b| a - b).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_edges() {
        let r = jitter_statistics(&[vec![1e-9; 5], vec![1e-9; 5]]).unwrap();
        assert_eq!(r.std_ps, vec![0.0, 0.0]);
        assert_eq!(r.skew_ps, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn three_point_population_std() {
        let r = jitter_statistics(&[vec![-10e-12, 0.0, 10e-12]]).unwrap();
        let want = (200.0f64 / 3.0).sqrt();
        assert!((r.std_ps[0] - want).abs() < 1e-9);
        assert!((r.std_ps[0] - 8.165).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            jitter_statistics(&[vec![0.0]]),
            Err(MetrologyError::TooFewEvents {
                channel: 0,
                events: 1
            })
        ));
        assert!(matches!(
            jitter_statistics(&[vec![0.0; 3], vec![0.0; 4]]),
            Err(MetrologyError::MismatchedEvents { .. })
        ));
    }

    #[test]
    fn small_array_recovers_skew() {
        let mut topo = BoardTopology::uniform(1);
        for (c, ch) in topo.boards[0].channels.iter_mut().enumerate() {
            ch.skew = c as f64 * 33e-12;
        }
        topo.boards[0].fanout_delay = 700e-12;
        let cfg = ArrayJitterConfig {
            events: 20,
            spacing_cycles: 8,
            threads: 2,
        };
        let r = measure_array_jitter(&topo, &cfg).unwrap();
        let want = expected_skew_ps(&topo);
        for i in 0..4 {
            assert!(r.std_ps[i] < 1e-3);
            for j in 0..4 {
                assert!((r.skew_ps[i][j] - want[i][j]).abs() < 1e-3);
            }
        }
    }
}
