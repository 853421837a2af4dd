// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared clock, trigger fan-out and multi-board arrays.
//!
//! A global trigger event reaches channel `c` of board `b` at
//! `event + fanout_delay[b] + skew[c]`. The sequencer samples it on the next
//! word-clock edge; sub-cycle timing survives only in the analog time stamps.
//!
//! Topology files are TOML:
//!
//! ```toml
//! format = "awgsim-topology/1"
//! clock_hz = 250e6
//! pipeline_delay = 2
//! rng_seed = 42
//!
//! [[board]]
//! fanout_delay_ps = 0.0
//! skew_ps = [0.0, 25.0, 50.0, 100.0]
//! jitter_sigma_ps = [10.0, 10.0, 10.0, 10.0]
//! ```
//!
//! Instead of listing boards, a `[generate]` table builds a regular array:
//! `boards`, `fanout_step_ps` (board `b` gets `b * step`), `skew_span_ps`
//! (skews spread linearly over all channels, first 0, last the span), and
//! `sigma_min_ps`/`sigma_max_ps` (per-channel sigma drawn uniformly from
//! `rng_seed`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{ChannelClock, DacLut, DacTransfer, FrontendError, TimingModel};
use crate::memory::{SequenceMemory, WaveformMemory};
use crate::sequencer::{run_for, EventLog, SampleWord, SequencerError, TriggerSchedule};
use crate::{CHANNELS_PER_BOARD, SAMPLES_PER_WORD, WORD_CLOCK_HZ};

pub const TOPOLOGY_FORMAT: &str = "awgsim-topology/1";
const FS_PER_S: f64 = 1e15;

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("topology: {0}")]
    Config(String),
    #[error("trigger event time {0} s is negative")]
    NegativeEventTime(f64),
    #[error("expected {expected} channel programs, got {got}")]
    ProgramCount { expected: usize, got: usize },
    #[error("board {board} channel {channel}: {error}")]
    Channel {
        board: usize,
        channel: usize,
        error: SequencerError,
    },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelTiming {
    pub skew: f64,
    pub jitter_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoardDescriptor {
    pub board_id: u16,
    pub fanout_delay: f64,
    pub channels: [ChannelTiming; CHANNELS_PER_BOARD],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId {
    pub board: usize,
    pub channel: usize,
}

impl ChannelId {
    pub fn global(&self) -> usize {
        self.board * CHANNELS_PER_BOARD + self.channel
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoardTopology {
    pub clock_frequency: f64,
    pub pipeline_delay: u32,
    pub rng_seed: u64,
    pub boards: Vec<BoardDescriptor>,
}

impl BoardTopology {
    /// `n` boards with zero delays and no jitter.
    pub fn uniform(n: usize) -> Self {
        BoardTopology {
            clock_frequency: WORD_CLOCK_HZ,
            pipeline_delay: 2,
            rng_seed: 0,
            boards: (0..n)
                .map(|b| BoardDescriptor {
                    board_id: b as u16,
                    fanout_delay: 0.0,
                    channels: [ChannelTiming::default(); CHANNELS_PER_BOARD],
                })
                .collect(),
        }
    }

    pub fn channel_count(&self) -> usize {
        self.boards.len() * CHANNELS_PER_BOARD
    }

    pub fn channels(&self) -> impl Iterator<Item = ChannelId> + '_ {
        (0..self.boards.len()).flat_map(|board| {
            (0..CHANNELS_PER_BOARD).map(move |channel| ChannelId { board, channel })
        })
    }

    pub fn channel(&self, id: ChannelId) -> &ChannelTiming {
        &self.boards[id.board].channels[id.channel]
    }

    pub fn channel_mut(&mut self, id: ChannelId) -> &mut ChannelTiming {
        &mut self.boards[id.board].channels[id.channel]
    }

    pub fn word_period(&self) -> f64 {
        1.0 / self.clock_frequency
    }

    /// Timing model of one channel; each channel gets its own seed.
    pub fn timing_model(&self, id: ChannelId) -> TimingModel {
        let ch = self.channel(id);
        TimingModel {
            pipeline_delay: self.pipeline_delay,
            channel_skew: ch.skew,
            jitter_sigma: ch.jitter_sigma,
            rng_seed: splitmix(self.rng_seed ^ splitmix(id.global() as u64 + 1)),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SyncError> {
        let cfg: TopologyFile =
            toml::from_str(text).map_err(|e| SyncError::Config(e.to_string()))?;
        cfg.build()
    }

    pub fn to_toml_string(&self) -> String {
        let file = TopologyFile {
            format: Some(TOPOLOGY_FORMAT.to_string()),
            clock_hz: self.clock_frequency,
            pipeline_delay: self.pipeline_delay,
            rng_seed: self.rng_seed,
            board: self
                .boards
                .iter()
                .map(|b| BoardEntry {
                    board_id: Some(b.board_id),
                    fanout_delay_ps: b.fanout_delay * 1e12,
                    skew_ps: b.channels.iter().map(|c| c.skew * 1e12).collect(),
                    jitter_sigma_ps: b.channels.iter().map(|c| c.jitter_sigma * 1e12).collect(),
                })
                .collect(),
            generate: None,
        };
        toml::to_string(&file).expect("topology serialises")
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    #[serde(default)]
    format: Option<String>,
    #[serde(default = "default_clock")]
    clock_hz: f64,
    #[serde(default = "default_pipeline")]
    pipeline_delay: u32,
    #[serde(default)]
    rng_seed: u64,
    #[serde(default)]
    board: Vec<BoardEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generate: Option<Generate>,
}

fn default_clock() -> f64 {
    WORD_CLOCK_HZ
}

fn default_pipeline() -> u32 {
    2
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoardEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    board_id: Option<u16>,
    #[serde(default)]
    fanout_delay_ps: f64,
    #[serde(default)]
    skew_ps: Vec<f64>,
    #[serde(default)]
    jitter_sigma_ps: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Generate {
    boards: usize,
    #[serde(default)]
    fanout_step_ps: f64,
    #[serde(default)]
    skew_span_ps: f64,
    sigma_min_ps: f64,
    sigma_max_ps: f64,
}

fn four(values: &[f64], what: &str, board: usize) -> Result<[f64; CHANNELS_PER_BOARD], SyncError> {
    match values.len() {
        0 => Ok([0.0; CHANNELS_PER_BOARD]),
        CHANNELS_PER_BOARD => Ok(values.try_into().unwrap()),
        n => Err(SyncError::Config(format!(
            "board {board}: {what} needs {CHANNELS_PER_BOARD} values, got {n}"
        ))),
    }
}

impl TopologyFile {
    fn build(self) -> Result<BoardTopology, SyncError> {
        if let Some(f) = &self.format {
            if f != TOPOLOGY_FORMAT {
                return Err(SyncError::Config(format!("unsupported format {f:?}")));
            }
        }
        if !(self.clock_hz > 0.0) {
            return Err(SyncError::Config("clock_hz must be positive".into()));
        }
        let boards = match (self.board.is_empty(), self.generate) {
            (false, Some(_)) => {
                return Err(SyncError::Config(
                    "use either [[board]] or [generate], not both".into(),
                ))
            }
            (true, None) => return Err(SyncError::Config("no boards".into())),
            (false, None) => self
                .board
                .iter()
                .enumerate()
                .map(|(b, e)| {
                    let skew = four(&e.skew_ps, "skew_ps", b)?;
                    let sigma = four(&e.jitter_sigma_ps, "jitter_sigma_ps", b)?;
                    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                        return Err(SyncError::Config(format!(
                            "board {b}: negative jitter sigma"
                        )));
                    }
                    Ok(BoardDescriptor {
                        board_id: e.board_id.unwrap_or(b as u16),
                        fanout_delay: e.fanout_delay_ps * 1e-12,
                        channels: std::array::from_fn(|c| ChannelTiming {
                            skew: skew[c] * 1e-12,
                            jitter_sigma: sigma[c] * 1e-12,
                        }),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
            (true, Some(g)) => {
                if g.boards == 0 || !(0.0 <= g.sigma_min_ps && g.sigma_min_ps <= g.sigma_max_ps) {
                    return Err(SyncError::Config("bad [generate] ranges".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
                let n = g.boards * CHANNELS_PER_BOARD;
                let span = |k: usize| {
                    if n > 1 {
                        g.skew_span_ps * k as f64 / (n - 1) as f64
                    } else {
                        0.0
                    }
                };
                (0..g.boards)
                    .map(|b| BoardDescriptor {
                        board_id: b as u16,
                        fanout_delay: g.fanout_step_ps * b as f64 * 1e-12,
                        channels: std::array::from_fn(|c| ChannelTiming {
                            skew: span(b * CHANNELS_PER_BOARD + c) * 1e-12,
                            jitter_sigma: if g.sigma_max_ps > g.sigma_min_ps {
                                rng.random_range(g.sigma_min_ps..g.sigma_max_ps) * 1e-12
                            } else {
                                g.sigma_min_ps * 1e-12
                            },
                        }),
                    })
                    .collect()
            }
        };
        Ok(BoardTopology {
            clock_frequency: self.clock_hz,
            pipeline_delay: self.pipeline_delay,
            rng_seed: self.rng_seed,
            boards,
        })
    }
}

/// Where and when one trigger event lands on one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerArrival {
    pub channel: ChannelId,
    /// Physical arrival time, seconds.
    pub time: f64,
    /// First word-clock cycle at or after the arrival.
    pub cycle: u64,
    /// How far quantization moved the arrival later, seconds (>= 0).
    pub quantization: f64,
}

/// Arrival of one event on every channel. Times are resolved to 1 fs before
/// rounding up to the cycle grid, so an arrival is never moved earlier.
pub fn distribute_trigger(
    event_time: f64,
    topo: &BoardTopology,
) -> Result<Vec<TriggerArrival>, SyncError> {
    if !(event_time >= 0.0) {
        return Err(SyncError::NegativeEventTime(event_time));
    }
    let period_fs = (topo.word_period() * FS_PER_S).round() as i128;
    Ok(topo
        .channels()
        .map(|id| {
            let time = event_time + topo.boards[id.board].fanout_delay + topo.channel(id).skew;
            let fs = (time * FS_PER_S).round() as i128;
            let cycle = fs.div_euclid(period_fs) + i128::from(fs.rem_euclid(period_fs) != 0);
            let cycle = cycle.max(0) as u64;
            TriggerArrival {
                channel: id,
                time,
                cycle,
                quantization: (cycle as i128 * period_fs - fs) as f64 / FS_PER_S,
            }
        })
        .collect())
}

/// Program image of one channel.
#[derive(Debug, Clone)]
pub struct ChannelProgram {
    pub sdm: SequenceMemory,
    pub wdm: WaveformMemory,
    pub dac: DacTransfer,
}

/// Output of one channel over a fixed window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRun {
    pub id: ChannelId,
    pub timing: TimingModel,
    pub trigger_cycles: Vec<u64>,
    pub words: Vec<SampleWord>,
    pub log: EventLog,
}

impl ChannelRun {
    /// Time-stamped voltages with the channel's own jitter sequence; the
    /// stream's cycle 0 is at t = 0.
    pub fn render(&self, dac: &DacTransfer) -> Result<crate::frontend::AnalogTrace, FrontendError> {
        Ok(ChannelClock::new(self.timing)?.timestamp(&self.words, &dac.lut(), 0.0))
    }

    /// Times of upward threshold crossings, i.e. the stamp of the first
    /// sample above `threshold_v` after one at or below it. Draws jitter in
    /// the same order as [`ChannelRun::render`] without materialising the
    /// trace.
    pub fn rising_edges(&self, dac: &DacLut, threshold_v: f64) -> Result<Vec<f64>, FrontendError> {
        let mut clock = ChannelClock::new(self.timing)?;
        let mut edges = Vec::new();
        let mut below = true;
        for (k, code) in self.words.iter().flat_map(|w| w.samples).enumerate() {
            let t = clock.stamp(0.0, k);
            let high = dac.convert(code) > threshold_v;
            if high && below {
                edges.push(t);
            }
            below = !high;
        }
        Ok(edges)
    }
}

/// Runs one channel for `n_cycles` with external triggers at the given
/// cycles.
pub fn run_channel(
    id: ChannelId,
    program: &ChannelProgram,
    timing: TimingModel,
    trigger_cycles: Vec<u64>,
    n_cycles: u64,
) -> Result<ChannelRun, SyncError> {
    let schedule = TriggerSchedule::external(trigger_cycles.iter().copied());
    let (words, log) =
        run_for(&program.sdm, &program.wdm, &schedule, n_cycles).map_err(|error| {
            SyncError::Channel {
                board: id.board,
                channel: id.channel,
                error,
            }
        })?;
    Ok(ChannelRun {
        id,
        timing,
        trigger_cycles,
        words,
        log,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayRun {
    pub channels: Vec<ChannelRun>,
}

impl ArrayRun {
    /// Rising edges per channel, computed on `threads` worker threads.
    pub fn rising_edges(
        &self,
        programs: &[&ChannelProgram],
        threshold_v: f64,
        threads: usize,
    ) -> Result<Vec<Vec<f64>>, SyncError> {
        let luts: Vec<DacLut> = programs.iter().map(|p| p.dac.lut()).collect();
        with_pool(threads, || {
            self.channels
                .par_iter()
                .zip(luts.par_iter())
                .map(|(run, lut)| run.rising_edges(lut, threshold_v).map_err(SyncError::from))
                .collect::<Result<Vec<_>, _>>()
        })?
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels
            .first()
            .map_or(0, |c| c.words.len() * SAMPLES_PER_WORD)
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, SyncError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SyncError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs every channel of the array against a list of global trigger events.
/// Results do not depend on `threads`.
pub fn run_array(
    topo: &BoardTopology,
    programs: &[&ChannelProgram],
    events: &[f64],
    n_cycles: u64,
    threads: usize,
) -> Result<ArrayRun, SyncError> {
    if programs.len() != topo.channel_count() {
        return Err(SyncError::ProgramCount {
            expected: topo.channel_count(),
            got: programs.len(),
        });
    }
    let mut per_channel: Vec<Vec<u64>> =
        vec![Vec::with_capacity(events.len()); topo.channel_count()];
    for &e in events {
        for a in distribute_trigger(e, topo)? {
            per_channel[a.channel.global()].push(a.cycle);
        }
    }
    let ids: Vec<ChannelId> = topo.channels().collect();
    let channels = with_pool(threads, || {
        ids.par_iter()
            .zip(per_channel.into_par_iter())
            .map(|(&id, cycles)| {
                run_channel(
                    id,
                    programs[id.global()],
                    topo.timing_model(id),
                    cycles,
                    n_cycles,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(ArrayRun { channels })
}
