// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Scripted measurement campaigns.
//!
//! A scenario is a TOML file naming the suites to run and their settings:
//!
//! ```toml
//! name = "linearity-sweep"
//! seed = 7
//! suites = ["linearity"]          # linearity, sfdr, jitter, phase_noise, seamless
//! topology = "array-topology.toml" # needed by the jitter suite
//! programs = ["programs/burst.toml"]
//!
//! [board]
//! inl_profile = { kind = "random", bound_lsb = 1.9 }
//!
//! [linearity]
//! dwell_cycles = 64
//! ```
//!
//! Paths are relative to the scenario file. The linearity, SFDR and
//! seamless suites drive the board through the command protocol only; the
//! jitter and phase-noise suites need sub-sample time stamps, which the
//! protocol does not carry, and run the timing model in process.
//!
//! Program files describe one channel program for the seamless suite:
//!
//! ```toml
//! software_triggers = [40]   # cycles after ARM
//! cycles = 400               # observation window
//! [[waveform]]
//! word_offset = 0
//! samples = [0, 1, 2, 3, 4, 5, 6, 7]   # or: ramp = { start = 0, step = 3, count = 256 }
//! [[entry]]
//! start = 0
//! length = 4
//! counter = 2
//! flags = ["wait", "end"]    # wait, end, jump, hold
//! trigger = "software"        # none, external, software, timer
//! jump = 0
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::frontend::{profiles, DacTransfer, TimingModel, DEFAULT_FULLSCALE_V};
use crate::memory::{
    EntryFlags, SampleCode, SequenceEntry, SequenceMemory, TriggerSource, WaveformMemory,
    MIN_SEGMENT_WORDS,
};
use crate::metrology::jitter::{expected_skew_ps, measure_array_jitter, ArrayJitterConfig};
use crate::metrology::linearity::{
    compute_inl_dnl, endpoint_fit, ramp_sweep, DEFAULT_DWELL_CYCLES,
};
use crate::metrology::phase_noise::{
    measure_phase_noise, phase_noise_scaling_check, DEFAULT_OFFSETS_HZ,
};
use crate::metrology::spectrum::{sfdr_csv, sfdr_sweep, FULL_SCALE_AMPLITUDE, SWEEP_POINTS};
use crate::metrology::{Bound, MetrologyError, Summary};
use crate::protocol::{
    shared, Board, CaptureSpec, Client, ClientError, Frame, Loopback, Tcp, TcpServer, Transport,
};
use crate::sequencer::{flatten_oracle, SampleWord, TriggerSchedule};
use crate::sync::BoardTopology;
use crate::{CHANNELS_PER_BOARD, SAMPLES_PER_WORD};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config: {0}")]
    Config(String),
    #[error("connection: {0}")]
    Connection(String),
    #[error("writing reports: {0}")]
    Io(#[from] io::Error),
    #[error("suite {suite}: {error}")]
    Suite {
        suite: &'static str,
        error: MetrologyError,
    },
}

impl ScenarioError {
    /// Process exit code: 1 for a suite that could not complete, 2 for
    /// configuration and connection problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Suite { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Linearity,
    Sfdr,
    Jitter,
    PhaseNoise,
    Seamless,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Linearity => "linearity",
            Suite::Sfdr => "sfdr",
            Suite::Jitter => "jitter",
            Suite::PhaseNoise => "phase_noise",
            Suite::Seamless => "seamless",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    #[default]
    Ideal,
    Random {
        bound_lsb: f64,
    },
    Smooth {
        bound_lsb: f64,
    },
    Bow {
        peak_lsb: f64,
    },
    Harmonic {
        order: u32,
        level_dbc: f64,
        #[serde(default = "full_scale")]
        amplitude: f64,
    },
}

fn full_scale() -> f64 {
    FULL_SCALE_AMPLITUDE
}

impl ProfileConfig {
    pub fn build(&self, seed: u64) -> Vec<f64> {
        match *self {
            ProfileConfig::Ideal => profiles::ideal(),
            ProfileConfig::Random { bound_lsb } => profiles::random_bounded(bound_lsb, seed),
            ProfileConfig::Smooth { bound_lsb } => profiles::smooth_random(bound_lsb, seed),
            ProfileConfig::Bow { peak_lsb } => profiles::bow(peak_lsb),
            ProfileConfig::Harmonic {
                order,
                level_dbc,
                amplitude,
            } => profiles::harmonic(order, level_dbc, amplitude),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoardConfig {
    pub board_id: u16,
    pub fullscale_v: f64,
    /// Applied to every channel.
    pub inl_profile: ProfileConfig,
}

impl Default for BoardConfig {
    fn default() -> Self {
        BoardConfig {
            board_id: 0,
            fullscale_v: DEFAULT_FULLSCALE_V,
            inl_profile: ProfileConfig::Ideal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearityConfig {
    pub channel: u8,
    pub dwell_cycles: u32,
    pub bound_lsb: f64,
}

impl Default for LinearityConfig {
    fn default() -> Self {
        LinearityConfig {
            channel: 0,
            dwell_cycles: DEFAULT_DWELL_CYCLES,
            bound_lsb: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfdrConfig {
    pub channel: u8,
    pub amplitude: f64,
    pub min_dbc: f64,
}

impl Default for SfdrConfig {
    fn default() -> Self {
        SfdrConfig {
            channel: 0,
            amplitude: FULL_SCALE_AMPLITUDE,
            min_dbc: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterConfig {
    pub events: usize,
    pub spacing_cycles: u64,
    /// 0 = one per core.
    pub threads: usize,
    pub std_min_ps: f64,
    pub std_max_ps: f64,
    pub mean_target_ps: f64,
    /// Relative tolerance on the band edges and on the mean.
    pub relative_tolerance: f64,
    pub skew_tolerance_ps: f64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        JitterConfig {
            events: 10_000,
            spacing_cycles: 8,
            threads: 0,
            std_min_ps: 9.22,
            std_max_ps: 10.89,
            mean_target_ps: 9.9,
            relative_tolerance: 0.10,
            skew_tolerance_ps: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseNoiseConfig {
    /// First entry is the reference carrier.
    pub carriers_hz: Vec<f64>,
    /// Allowed deviation from the ideal shift, one per non-reference
    /// carrier.
    pub tolerance_db: Vec<f64>,
    pub sigma_ps: f64,
    pub records: usize,
}

impl Default for PhaseNoiseConfig {
    fn default() -> Self {
        PhaseNoiseConfig {
            carriers_hz: vec![100e6, 200e6, 400e6],
            tolerance_db: vec![0.5, 0.7],
            sigma_ps: 10.0,
            records: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeamlessConfig {
    pub channel: u8,
    /// Randomly generated programs, in addition to any program files.
    pub random_programs: usize,
}

impl Default for SeamlessConfig {
    fn default() -> Self {
        SeamlessConfig {
            channel: 1,
            random_programs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    suites: Vec<Suite>,
    #[serde(default)]
    topology: Option<PathBuf>,
    #[serde(default)]
    programs: Vec<PathBuf>,
    #[serde(default)]
    board: BoardConfig,
    #[serde(default)]
    linearity: LinearityConfig,
    #[serde(default)]
    sfdr: SfdrConfig,
    #[serde(default)]
    jitter: JitterConfig,
    #[serde(default)]
    phase_noise: PhaseNoiseConfig,
    #[serde(default)]
    seamless: SeamlessConfig,
}

/// A loaded scenario with its referenced files resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub topology: Option<BoardTopology>,
    pub programs: Vec<ProgramCase>,
    pub board: BoardConfig,
    pub linearity: LinearityConfig,
    pub sfdr: SfdrConfig,
    pub jitter: JitterConfig,
    pub phase_noise: PhaseNoiseConfig,
    pub seamless: SeamlessConfig,
}

fn config_err(path: &Path, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Config(format!("{}: {e}", path.display()))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses a scenario whose relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let f: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        let topology = match &f.topology {
            Some(p) => {
                let path = base.join(p);
                let text = fs::read_to_string(&path).map_err(|e| config_err(&path, e))?;
                Some(BoardTopology::from_toml_str(&text).map_err(|e| config_err(&path, e))?)
            }
            None => None,
        };
        if f.suites.contains(&Suite::Jitter) && topology.is_none() {
            return Err(ScenarioError::Config(
                "the jitter suite needs a topology file".into(),
            ));
        }
        let programs = f
            .programs
            .iter()
            .map(|p| {
                let path = base.join(p);
                let text = fs::read_to_string(&path).map_err(|e| config_err(&path, e))?;
                ProgramCase::from_toml(&text).map_err(|e| config_err(&path, e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if f.linearity.dwell_cycles == 0 || f.linearity.dwell_cycles % MIN_SEGMENT_WORDS != 0 {
            return Err(ScenarioError::Config(
                "linearity.dwell_cycles must be a positive multiple of 4".into(),
            ));
        }
        for ch in [f.linearity.channel, f.sfdr.channel, f.seamless.channel] {
            if ch as usize >= CHANNELS_PER_BOARD {
                return Err(ScenarioError::Config(format!(
                    "channel {ch} does not exist"
                )));
            }
        }
        if f.phase_noise.carriers_hz.len() != f.phase_noise.tolerance_db.len() + 1 {
            return Err(ScenarioError::Config(
                "phase_noise.tolerance_db needs one entry per non-reference carrier".into(),
            ));
        }
        Ok(Scenario {
            name: f.name,
            seed: f.seed,
            suites: f.suites,
            topology,
            programs,
            board: f.board,
            linearity: f.linearity,
            sfdr: f.sfdr,
            jitter: f.jitter,
            phase_noise: f.phase_noise,
            seamless: f.seamless,
        })
    }

    /// DAC transfer installed on every channel for `seed`.
    pub fn dac(&self, seed: u64) -> Result<DacTransfer, ScenarioError> {
        DacTransfer::with_profile(self.board.fullscale_v, self.board.inl_profile.build(seed))
            .map_err(|e| ScenarioError::Config(e.to_string()))
    }

    /// The simulated board this scenario describes.
    pub fn build_board(&self, seed: u64) -> Result<Board, ScenarioError> {
        let dac = self.dac(seed)?;
        let mut b = Board::new(self.board.board_id);
        for ch in 0..CHANNELS_PER_BOARD {
            b.set_dac(ch, &dac);
        }
        Ok(b)
    }
}

/// One program for the seamless suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramCase {
    pub waveform: Vec<(u32, Vec<SampleCode>)>,
    pub entries: Vec<SequenceEntry>,
    pub software_triggers: Vec<u64>,
    pub cycles: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramFile {
    #[serde(default)]
    software_triggers: Vec<u64>,
    cycles: u64,
    #[serde(default)]
    waveform: Vec<WaveformBlock>,
    entry: Vec<EntryDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaveformBlock {
    word_offset: u32,
    #[serde(default)]
    samples: Vec<i16>,
    #[serde(default)]
    ramp: Option<Ramp>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Ramp {
    start: i32,
    step: i32,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDef {
    start: u32,
    length: u32,
    #[serde(default = "one")]
    counter: u32,
    #[serde(default)]
    flags: Vec<String>,
    #[serde(default)]
    trigger: Option<String>,
    #[serde(default)]
    jump: u16,
}

fn one() -> u32 {
    1
}

impl ProgramCase {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let f: ProgramFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut waveform = Vec::new();
        for b in f.waveform {
            let mut s = b.samples;
            if let Some(r) = b.ramp {
                s.extend(
                    (0..r.count).map(|k| (r.start + r.step * k as i32).clamp(-32768, 32767) as i16),
                );
            }
            if s.len() % SAMPLES_PER_WORD != 0 {
                return Err(format!(
                    "waveform at word {} is not a whole number of words",
                    b.word_offset
                ));
            }
            waveform.push((b.word_offset, s));
        }
        let entries = f
            .entry
            .into_iter()
            .map(|e| {
                let mut flags = EntryFlags::empty();
                for name in &e.flags {
                    flags |= match name.as_str() {
                        "wait" => EntryFlags::WAIT_TRIGGER,
                        "end" => EntryFlags::END_OF_SEQUENCE,
                        "jump" => EntryFlags::JUMP,
                        "hold" => EntryFlags::HOLD_LAST,
                        other => return Err(format!("unknown flag {other:?}")),
                    };
                }
                let trigger = match e.trigger.as_deref() {
                    None | Some("none") => TriggerSource::None,
                    Some("external") => TriggerSource::External,
                    Some("software") => TriggerSource::Software,
                    Some("timer") => TriggerSource::InternalTimer,
                    Some(other) => return Err(format!("unknown trigger {other:?}")),
                };
                Ok(SequenceEntry {
                    flags,
                    trigger_source: trigger,
                    jump_target: e.jump,
                    ..SequenceEntry::segment(e.start, e.length).with_counter(e.counter)
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProgramCase {
            waveform,
            entries,
            software_triggers: f.software_triggers,
            cycles: f.cycles,
        })
    }

    /// A terminating program of up to six straight-line or forward-jumping
    /// entries with software waits, and one trigger per wait.
    pub fn random(rng: &mut impl Rng) -> Self {
        let n = rng.random_range(1..=6usize);
        let mut entries = Vec::with_capacity(n);
        let mut word = 0u32;
        let mut waveform_words = 0u32;
        for i in 0..n {
            let len = rng.random_range(MIN_SEGMENT_WORDS..=12);
            let start = if i > 0 && rng.random_bool(0.2) {
                0
            } else {
                word
            };
            word = word.max(start + len);
            waveform_words = waveform_words.max(start + len);
            let mut e = SequenceEntry::segment(start, len).with_counter(rng.random_range(1..=3));
            if rng.random_bool(0.3) {
                e = e.wait_for(TriggerSource::Software);
            }
            if rng.random_bool(0.3) {
                e = e.with_flags(e.flags | EntryFlags::HOLD_LAST);
            }
            if i + 1 < n && i + 2 < n && rng.random_bool(0.15) {
                e = e.jump_to(rng.random_range(i as u16 + 1..n as u16));
            }
            entries.push(e);
        }
        let last = entries.last_mut().unwrap();
        last.flags.remove(EntryFlags::JUMP);
        *last = last.end();
        let samples: Vec<SampleCode> = (0..waveform_words as usize * SAMPLES_PER_WORD)
            .map(|_| rng.random())
            .collect();
        let busy: u64 = entries
            .iter()
            .map(|e| e.length as u64 * e.counter as u64)
            .sum();
        let waits = entries
            .iter()
            .filter(|e| e.flags.contains(EntryFlags::WAIT_TRIGGER))
            .count() as u64;
        let horizon = busy + waits * 24 + 8;
        let mut triggers: Vec<u64> = (0..waits)
            .map(|_| rng.random_range(0..horizon.saturating_sub(busy + 4).max(1)))
            .collect();
        triggers.sort_unstable();
        triggers.dedup();
        ProgramCase {
            waveform: vec![(0, samples)],
            entries,
            software_triggers: triggers,
            cycles: horizon + waits * 4 + 8,
        }
    }

    pub fn memories(&self, channel: u8) -> Result<(SequenceMemory, WaveformMemory), String> {
        let mut wdm = WaveformMemory::new(channel);
        for (off, s) in &self.waveform {
            wdm.load_waveform(*off, s).map_err(|e| e.to_string())?;
        }
        let sdm = SequenceMemory::from_entries(channel, self.entries.clone())
            .map_err(|e| e.to_string())?;
        Ok((sdm, wdm))
    }

    /// Words the program should emit from ARM on, per the expansion oracle.
    pub fn expected(&self) -> Result<Vec<SampleWord>, String> {
        let (sdm, wdm) = self.memories(0)?;
        flatten_oracle(
            &sdm,
            &wdm,
            &TriggerSchedule::software(self.software_triggers.iter().copied()),
            Some(self.cycles),
        )
        .map_err(|e| e.to_string())
    }
}

/// Loads a program over the wire, runs it with its software triggers and
/// returns the captured words.
pub fn play_over_wire<T: Transport>(
    client: &mut Client<T>,
    channel: u8,
    case: &ProgramCase,
) -> Result<Vec<SampleWord>, ClientError> {
    for (off, s) in &case.waveform {
        client.write_wdm(channel, *off, s)?;
    }
    client.write_sdm(channel, 0, &case.entries)?;
    let samples = (case.cycles as usize * SAMPLES_PER_WORD) as u32;
    client.arm_capture(CaptureSpec::codes(channel, samples))?;
    client.arm(channel)?;
    let mut now = 0;
    for &t in &case.software_triggers {
        client.advance(t - now)?;
        client.soft_trigger(channel)?;
        now = t;
    }
    client.advance(case.cycles - now)?;
    client.stop(channel)?;
    let codes = client.read_capture_codes(samples)?;
    Ok(codes
        .chunks_exact(SAMPLES_PER_WORD)
        .map(|w| SampleWord {
            samples: std::array::from_fn(|j| w[j].0),
            valid: w[0].1,
        })
        .collect())
}

/// Whether a captured run matches the oracle: identical up to the oracle's
/// end and idle afterwards.
pub fn matches_oracle(captured: &[SampleWord], expected: &[SampleWord]) -> bool {
    captured.len() >= expected.len()
        && captured[..expected.len()] == *expected
        && captured[expected.len()..].iter().all(|w| !w.valid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Csv,
    Summary,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Connection {
    Loopback,
    /// Serve the scenario's board on this address and connect to it.
    Listen(String),
    /// Connect to a board already served elsewhere.
    Connect(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub connection: Connection,
    pub emit: Emit,
    /// Worker threads for in-process suites; 0 = one per core.
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

enum AnyTransport {
    Loopback(Loopback),
    Tcp(Tcp),
}

impl Transport for AnyTransport {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        match self {
            AnyTransport::Loopback(t) => t.send(bytes),
            AnyTransport::Tcp(t) => t.send(bytes),
        }
    }

    fn recv(&mut self) -> Result<Frame, ClientError> {
        match self {
            AnyTransport::Loopback(t) => t.recv(),
            AnyTransport::Tcp(t) => t.recv(),
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    emit: Emit,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, body: &str) -> io::Result<()> {
        if self.emit == Emit::Summary {
            return Ok(());
        }
        let p = self.dir.join(name);
        fs::write(&p, body)?;
        self.files.push(p);
        Ok(())
    }
}

fn suite_err(suite: Suite) -> impl Fn(MetrologyError) -> ScenarioError {
    move |error| ScenarioError::Suite {
        suite: suite.name(),
        error,
    }
}

/// Runs every suite of `scenario` and writes its reports. With no suites,
/// nothing is written.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Outcome, ScenarioError> {
    let seed = opts.seed.unwrap_or(scenario.seed);
    let mut summary = Summary::new();
    if scenario.suites.is_empty() {
        return Ok(Outcome {
            summary,
            files: Vec::new(),
        });
    }
    fs::create_dir_all(&opts.out_dir)?;
    let mut w = Writer {
        dir: &opts.out_dir,
        emit: opts.emit,
        files: Vec::new(),
    };
    summary.info("SCENARIO", &scenario.name);
    summary.info("SEED", seed);

    let wire = scenario
        .suites
        .iter()
        .any(|s| matches!(s, Suite::Linearity | Suite::Sfdr | Suite::Seamless));
    let mut _server = None;
    let mut client = if wire {
        let conn = |e: io::Error| ScenarioError::Connection(e.to_string());
        let transport = match &opts.connection {
            Connection::Loopback => {
                AnyTransport::Loopback(Loopback::new(shared(scenario.build_board(seed)?)))
            }
            Connection::Listen(addr) => {
                let server =
                    TcpServer::spawn(shared(scenario.build_board(seed)?), addr.as_str(), None)
                        .map_err(conn)?;
                let t = Tcp::connect(server.local_addr())
                    .map_err(|e| ScenarioError::Connection(e.to_string()))?;
                _server = Some(server);
                AnyTransport::Tcp(t)
            }
            Connection::Connect(addr) => AnyTransport::Tcp(
                Tcp::connect(addr.as_str())
                    .map_err(|e| ScenarioError::Connection(e.to_string()))?,
            ),
        };
        Some(Client::new(transport))
    } else {
        None
    };

    for &suite in &scenario.suites {
        summary.comment(&format!("suite {}", suite.name()));
        let err = suite_err(suite);
        let result = (|| -> Result<(), ScenarioError> {
            match suite {
                Suite::Linearity => {
                    let c = client.as_mut().unwrap();
                    let cfg = &scenario.linearity;
                    let volts = ramp_sweep(c, cfg.channel, cfg.dwell_cycles).map_err(&err)?;
                    let r = compute_inl_dnl(&volts).map_err(&err)?;
                    summary.comment("inl: endpoint fit");
                    summary.info("LINEARITY_CODES", r.codes());
                    summary.info("LINEARITY_STEPS", r.transitions());
                    summary.check(
                        "INL_MAX_LSB",
                        r.max_abs_inl,
                        6,
                        Bound::AtMost(cfg.bound_lsb),
                    );
                    summary.check(
                        "DNL_MAX_LSB",
                        r.max_abs_dnl,
                        6,
                        Bound::AtMost(cfg.bound_lsb),
                    );
                    let injected = endpoint_fit(&scenario.board.inl_profile.build(seed));
                    let err_lsb = r
                        .inl
                        .iter()
                        .zip(&injected)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    summary.check("INL_RECOVERY_ERR_LSB", err_lsb, 9, Bound::AtMost(1e-6));
                    w.csv("linearity.csv", &r.to_csv(&volts))?;
                }
                Suite::Sfdr => {
                    let c = client.as_mut().unwrap();
                    let cfg = &scenario.sfdr;
                    let traces = sfdr_sweep(c, cfg.channel, cfg.amplitude).map_err(&err)?;
                    let points: Vec<_> = traces.iter().map(|t| t.point).collect();
                    let min = points
                        .iter()
                        .map(|p| p.sfdr_dbc)
                        .fold(f64::INFINITY, f64::min);
                    summary.comment("sfdr: rectangular window, tone on nearest odd bin of 4096");
                    summary.check(
                        "SFDR_POINTS",
                        points.len() as f64,
                        0,
                        Bound::Equals(SWEEP_POINTS as f64),
                    );
                    summary.check("SFDR_MIN_DBC", min, 4, Bound::AtLeast(cfg.min_dbc));
                    w.csv("sfdr.csv", &sfdr_csv(&points))?;
                }
                Suite::Jitter => {
                    let cfg = &scenario.jitter;
                    let mut topo = scenario.topology.clone().unwrap();
                    topo.rng_seed = seed;
                    let threads = opts.threads.unwrap_or(cfg.threads);
                    let r = measure_array_jitter(
                        &topo,
                        &ArrayJitterConfig {
                            events: cfg.events,
                            spacing_cycles: cfg.spacing_cycles,
                            threads,
                        },
                    )
                    .map_err(&err)?;
                    let tol = cfg.relative_tolerance;
                    let want = expected_skew_ps(&topo);
                    let skew_err = r
                        .skew_ps
                        .iter()
                        .flatten()
                        .zip(want.iter().flatten())
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    summary.info("JITTER_CHANNELS", r.channels());
                    summary.info("JITTER_EVENTS", r.events);
                    summary.check(
                        "JITTER_MIN_STD_PS",
                        r.min_std_ps,
                        4,
                        Bound::AtLeast(cfg.std_min_ps * (1.0 - tol)),
                    );
                    summary.check(
                        "JITTER_MAX_STD_PS",
                        r.max_std_ps,
                        4,
                        Bound::AtMost(cfg.std_max_ps * (1.0 + tol)),
                    );
                    summary.check(
                        "JITTER_MEAN_STD_PS",
                        r.mean_std_ps,
                        4,
                        Bound::Within(
                            cfg.mean_target_ps * (1.0 - tol),
                            cfg.mean_target_ps * (1.0 + tol),
                        ),
                    );
                    summary.info("SKEW_SPAN_PS", format!("{:.4}", r.max_abs_skew_ps()));
                    summary.check(
                        "SKEW_MAX_ERR_PS",
                        skew_err,
                        4,
                        Bound::AtMost(cfg.skew_tolerance_ps),
                    );
                    w.csv("jitter_std.csv", &r.std_csv())?;
                    w.csv("jitter_skew.csv", &r.skew_csv())?;
                }
                Suite::PhaseNoise => {
                    let cfg = &scenario.phase_noise;
                    let timing = TimingModel {
                        jitter_sigma: cfg.sigma_ps * 1e-12,
                        rng_seed: seed,
                        ..Default::default()
                    };
                    let curves = cfg
                        .carriers_hz
                        .iter()
                        .map(|&f| measure_phase_noise(f, timing, cfg.records, &DEFAULT_OFFSETS_HZ))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(&err)?;
                    let mut csv = String::new();
                    for (i, c) in curves.iter().enumerate() {
                        let body = c.to_csv();
                        csv.push_str(if i == 0 {
                            &body
                        } else {
                            body.split_once('\n').unwrap().1
                        });
                    }
                    for (k, c) in curves.iter().enumerate().skip(1) {
                        let ratio = c.carrier_hz / curves[0].carrier_hz;
                        let ideal = 20.0 * ratio.log10();
                        let shift = phase_noise_scaling_check(&curves[0], c).map_err(&err)?;
                        let tol = cfg.tolerance_db[k - 1];
                        summary.check(
                            &format!("PN_SHIFT_X{}_DB", ratio.round() as u64),
                            shift,
                            4,
                            Bound::Within(ideal - tol, ideal + tol),
                        );
                    }
                    w.csv("phase_noise.csv", &csv)?;
                }
                Suite::Seamless => {
                    let c = client.as_mut().unwrap();
                    let cfg = &scenario.seamless;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut cases = scenario.programs.clone();
                    cases.extend((0..cfg.random_programs).map(|_| ProgramCase::random(&mut rng)));
                    let mut csv = String::from("case,entries,words,match\n");
                    let mut mismatches = 0usize;
                    for (i, case) in cases.iter().enumerate() {
                        let expected = case
                            .expected()
                            .map_err(|e| ScenarioError::Config(format!("program {i}: {e}")))?;
                        let got =
                            play_over_wire(c, cfg.channel, case).map_err(|e| err(e.into()))?;
                        let ok = matches_oracle(&got, &expected);
                        mismatches += usize::from(!ok);
                        csv.push_str(&format!(
                            "{i},{},{},{}\n",
                            case.entries.len(),
                            expected.len(),
                            ok
                        ));
                    }
                    summary.info("SEAMLESS_CASES", cases.len());
                    summary.check(
                        "SEAMLESS_MISMATCHES",
                        mismatches as f64,
                        0,
                        Bound::Equals(0.0),
                    );
                    w.csv("seamless.csv", &csv)?;
                }
            }
            Ok(())
        })();
        match result {
            Ok(()) => {}
            Err(ScenarioError::Suite { suite, error }) => {
                summary.comment(&format!("{suite} aborted: {error}"));
                summary.check(
                    &format!("{}_COMPLETED", suite.to_uppercase()),
                    0.0,
                    0,
                    Bound::Equals(1.0),
                );
            }
            Err(e) => return Err(e),
        }
    }
    if opts.emit != Emit::Csv {
        let p = opts.out_dir.join("summary.txt");
        fs::write(&p, summary.to_string())?;
        w.files.push(p);
    }
    Ok(Outcome {
        summary,
        files: w.files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        let e =
            Scenario::from_toml("name = \"x\"\nsuites = [\"bogus\"]", Path::new(".")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn jitter_needs_topology() {
        assert!(
            Scenario::from_toml("name = \"x\"\nsuites = [\"jitter\"]", Path::new(".")).is_err()
        );
    }

    #[test]
    fn missing_program_file() {
        let e = Scenario::from_toml(
            "name = \"x\"\nprograms = [\"nope.toml\"]",
            Path::new("/nonexistent"),
        )
        .unwrap_err();
        assert!(matches!(e, ScenarioError::Config(_)));
    }

    #[test]
    fn empty_suite_list_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let s = Scenario::from_toml("name = \"empty\"", Path::new(".")).unwrap();
        let out = run_scenario(
            &s,
            &RunOptions {
                seed: None,
                out_dir: dir.path().join("out"),
                connection: Connection::Loopback,
                emit: Emit::Both,
                threads: None,
            },
        )
        .unwrap();
        assert!(out.passed());
        assert!(out.files.is_empty());
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn program_file_parses() {
        let text = r#"
            software_triggers = [10]
            cycles = 100
            [[waveform]]
            word_offset = 0
            ramp = { start = 0, step = 1, count = 64 }
            [[entry]]
            start = 0
            length = 4
            counter = 2
            [[entry]]
            start = 4
            length = 4
            flags = ["wait", "end", "hold"]
            trigger = "software"
        "#;
        let p = ProgramCase::from_toml(text).unwrap();
        assert_eq!(p.entries.len(), 2);
        assert!(p.entries[1].flags.contains(EntryFlags::HOLD_LAST));
        let exp = p.expected().unwrap();
        // 8 words, gap until 10 + 2, then 4 words
        assert_eq!(exp.len(), 16);
        assert_eq!(exp.iter().filter(|w| w.valid).count(), 12);
        assert!(
            ProgramCase::from_toml("cycles = 1\n[[entry]]\nstart=0\nlength=4\nflags=[\"x\"]")
                .is_err()
        );
    }

    #[test]
    fn random_cases_play_back_over_loopback() {
        let mut c = crate::protocol::loopback_client(Board::new(0));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let case = ProgramCase::random(&mut rng);
            let got = play_over_wire(&mut c, 2, &case).unwrap();
            assert!(matches_oracle(&got, &case.expected().unwrap()));
        }
    }
}
