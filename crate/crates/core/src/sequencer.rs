// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate sequence controller.
//!
//! One [`ChannelSequencer`] per channel. Each call to [`ChannelSequencer::step`]
//! is one 250 MHz cycle and yields one [`SampleWord`].
//!
//! Timing rules:
//!
//! * On the first cycle of every pass over a segment the FSM prefetches the
//!   instruction that follows the pass (the same entry again while repeats
//!   remain). Its resources are ready [`PREFETCH_LATENCY_CYCLES`] later, so a
//!   pass shorter than that starves the pipeline. Starvation inserts invalid
//!   words and is counted, never silently absorbed.
//! * A segment waiting on a trigger emits its first word
//!   [`TRIGGER_LATENCY_CYCLES`] after the matching edge. An edge arriving on
//!   the cycle that finishes the preceding pass counts for the wait.
//! * Edges seen while running are logged and otherwise ignored.

use std::fmt;

use thiserror::Error;

use crate::memory::{
    EntryFlags, SampleCode, SequenceEntry, SequenceMemory, TriggerSource, WaveformMemory,
};
use crate::SAMPLES_PER_WORD;

/// Cycles from a matching trigger edge to the first waveform word.
pub const TRIGGER_LATENCY_CYCLES: u64 = 2;
/// Cycles from a prefetch request until the next instruction can start.
pub const PREFETCH_LATENCY_CYCLES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum ChannelStatus {
    #[default]
    Idle = 0,
    ArmedWaitingTrigger = 1,
    Running = 2,
    Done = 3,
}

impl ChannelStatus {
    pub fn from_wire(b: u8) -> Option<Self> {
        Some(match b {
            0 => ChannelStatus::Idle,
            1 => ChannelStatus::ArmedWaitingTrigger,
            2 => ChannelStatus::Running,
            3 => ChannelStatus::Done,
            _ => return None,
        })
    }

    pub fn is_active(self) -> bool {
        matches!(
            self,
            ChannelStatus::Running | ChannelStatus::ArmedWaitingTrigger
        )
    }
}

/// Trigger edges present during one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CycleInputs {
    pub external_trigger: bool,
    pub software_trigger: bool,
    pub timer_fire: bool,
}

impl CycleInputs {
    #[inline]
    pub fn fires(&self, source: TriggerSource) -> bool {
        match source {
            TriggerSource::None => false,
            TriggerSource::External => self.external_trigger,
            TriggerSource::Software => self.software_trigger,
            TriggerSource::InternalTimer => self.timer_fire,
        }
    }

    #[inline]
    pub fn any(&self) -> bool {
        self.external_trigger || self.software_trigger || self.timer_fire
    }
}

/// One cycle of DAC input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleWord {
    pub samples: [SampleCode; SAMPLES_PER_WORD],
    /// False while idle, waiting, or starved.
    pub valid: bool,
}

impl SampleWord {
    #[inline]
    pub fn idle(level: SampleCode) -> Self {
        SampleWord {
            samples: [level; SAMPLES_PER_WORD],
            valid: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EventKind {
    Start = 0,
    SegmentSwitch = 1,
    RepeatWrap = 2,
    TriggerSeen = 3,
    Done = 4,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Start => "START",
            EventKind::SegmentSwitch => "SEGMENT_SWITCH",
            EventKind::RepeatWrap => "REPEAT_WRAP",
            EventKind::TriggerSeen => "TRIGGER_SEEN",
            EventKind::Done => "DONE",
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        Some(match b {
            0 => EventKind::Start,
            1 => EventKind::SegmentSwitch,
            2 => EventKind::RepeatWrap,
            3 => EventKind::TriggerSeen,
            4 => EventKind::Done,
            _ => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub cycle: u64,
    pub channel: u8,
    pub kind: EventKind,
    pub entry_index: u16,
}

/// Size of one binary event record, excluding its length prefix.
pub const EVENT_RECORD_BYTES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn clear(&mut self) {
        self.events.clear();
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,channel,event,entry_index\n");
        for e in &self.events {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.cycle, e.channel, e.kind, e.entry_index
            ));
        }
        out
    }

    /// Each record is `len:u16` (always 12) followed by
    /// `cycle:u64 channel:u8 event:u8 entry_index:u16`, little-endian.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.events.len() * (2 + EVENT_RECORD_BYTES));
        for e in &self.events {
            out.extend_from_slice(&(EVENT_RECORD_BYTES as u16).to_le_bytes());
            out.extend_from_slice(&e.cycle.to_le_bytes());
            out.push(e.channel);
            out.push(e.kind as u8);
            out.extend_from_slice(&e.entry_index.to_le_bytes());
        }
        out
    }

    /// Parses length-prefixed records. Records longer than 12 bytes are read
    /// for their first 12 bytes and the remainder skipped.
    pub fn from_binary(mut bytes: &[u8]) -> Option<Self> {
        let mut events = Vec::new();
        while !bytes.is_empty() {
            let len = u16::from_le_bytes(bytes.get(0..2)?.try_into().ok()?) as usize;
            let rec = bytes.get(2..2 + len)?;
            if len < EVENT_RECORD_BYTES {
                return None;
            }
            events.push(Event {
                cycle: u64::from_le_bytes(rec[0..8].try_into().ok()?),
                channel: rec[8],
                kind: EventKind::from_wire(rec[9])?,
                entry_index: u16::from_le_bytes([rec[10], rec[11]]),
            });
            bytes = &bytes[2 + len..];
        }
        Some(EventLog { events })
    }
}

/// Runtime faults. Validated programs never raise these.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    #[error("entry {entry} reads WDM word {addr} beyond capacity")]
    AddressOutOfRange { entry: u16, addr: u64 },
    #[error("entry {entry} jumps to missing entry {target}")]
    BadJump { entry: u16, target: u16 },
    #[error("entry {entry} is the last entry and has no successor")]
    FallsOffEnd { entry: u16 },
    #[error("entry {entry} has zero length")]
    EmptySegment { entry: u16 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequencerError {
    #[error("no program loaded")]
    NoProgram,
    #[error("cycle {cycle}: {fault}")]
    Fault { cycle: u64, fault: Fault },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Successor {
    Entry(u16),
    End,
}

/// FSM state of one channel.
#[derive(Debug, Clone, Default)]
pub struct ChannelSequencer {
    channel: u8,
    status: ChannelStatus,
    current: u16,
    prefetched: Option<Successor>,
    word_ptr: u32,
    repeats_left: u32,
    infinite: bool,
    cycle: u64,
    // cycle at which the prefetched instruction's resources are in place
    ready_at: u64,
    // first-word cycle once a trigger has been accepted
    start_at: Option<u64>,
    pass_pending: bool,
    pending_event: Option<EventKind>,
    starving: bool,
    hold: SampleCode,
    executed_words: u64,
    starvation_events: u64,
    starved_cycles: u64,
}

impl ChannelSequencer {
    pub fn new(channel: u8) -> Self {
        ChannelSequencer {
            channel,
            ..Default::default()
        }
    }

    pub fn channel(&self) -> u8 {
        self.channel
    }

    pub fn status(&self) -> ChannelStatus {
        self.status
    }

    pub fn current_index(&self) -> u16 {
        self.current
    }

    /// Index of the instruction queued behind the current pass, if any.
    pub fn prefetched_index(&self) -> Option<u16> {
        match self.prefetched {
            Some(Successor::Entry(i)) => Some(i),
            _ => None,
        }
    }

    pub fn word_ptr(&self) -> u32 {
        self.word_ptr
    }

    pub fn repeats_left(&self) -> Option<u32> {
        (!self.infinite).then_some(self.repeats_left)
    }

    /// Next cycle to be executed.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn executed_words(&self) -> u64 {
        self.executed_words
    }

    /// Boundaries at which the next instruction was needed before it was
    /// fetched.
    pub fn starvation_events(&self) -> u64 {
        self.starvation_events
    }

    pub fn starved_cycles(&self) -> u64 {
        self.starved_cycles
    }

    /// Starts the program at entry 0 on the next executed cycle.
    pub fn arm(&mut self, sdm: &SequenceMemory) -> Result<(), SequencerError> {
        let first = *sdm.get(0).ok_or(SequencerError::NoProgram)?;
        self.current = 0;
        self.load_repeats(&first);
        self.word_ptr = 0;
        self.prefetched = None;
        self.ready_at = self.cycle;
        self.start_at = None;
        self.pass_pending = true;
        self.pending_event = Some(EventKind::Start);
        self.starving = false;
        self.hold = 0;
        self.status = if first.flags.contains(EntryFlags::WAIT_TRIGGER) {
            ChannelStatus::ArmedWaitingTrigger
        } else {
            ChannelStatus::Running
        };
        Ok(())
    }

    pub fn stop(&mut self) {
        self.status = ChannelStatus::Idle;
        self.start_at = None;
        self.prefetched = None;
        self.hold = 0;
    }

    /// Advances an idle or finished channel by `cycles` without producing
    /// output. Returns false (and does nothing) for an active channel.
    pub fn skip_idle(&mut self, cycles: u64) -> bool {
        if self.status.is_active() {
            return false;
        }
        self.cycle += cycles;
        true
    }

    /// Output level while no valid word is emitted.
    pub fn idle_level(&self) -> SampleCode {
        self.hold
    }

    /// Executes one cycle.
    pub fn step(
        &mut self,
        sdm: &SequenceMemory,
        wdm: &WaveformMemory,
        inputs: CycleInputs,
        log: &mut EventLog,
    ) -> Result<SampleWord, SequencerError> {
        let c = self.cycle;
        let out = self.execute(c, sdm, wdm, inputs, log);
        self.cycle += 1;
        out.map_err(|fault| SequencerError::Fault { cycle: c, fault })
    }

    fn execute(
        &mut self,
        c: u64,
        sdm: &SequenceMemory,
        wdm: &WaveformMemory,
        inputs: CycleInputs,
        log: &mut EventLog,
    ) -> Result<SampleWord, Fault> {
        match self.status {
            ChannelStatus::Idle | ChannelStatus::Done => Ok(SampleWord::idle(self.hold)),
            ChannelStatus::ArmedWaitingTrigger => {
                if inputs.any() {
                    self.log(log, c, EventKind::TriggerSeen);
                }
                if self.start_at.is_none() {
                    let source = sdm.get(self.current as usize).map(|e| e.trigger_source);
                    if source.is_some_and(|s| inputs.fires(s)) {
                        self.start_at = Some(c + TRIGGER_LATENCY_CYCLES);
                    }
                }
                match self.start_at {
                    Some(at) if c >= at => {
                        self.status = ChannelStatus::Running;
                        self.start_at = None;
                        self.emit(c, sdm, wdm, inputs, log)
                    }
                    _ => Ok(SampleWord::idle(self.hold)),
                }
            }
            ChannelStatus::Running => {
                if inputs.any() {
                    self.log(log, c, EventKind::TriggerSeen);
                }
                self.emit(c, sdm, wdm, inputs, log)
            }
        }
    }

    #[inline]
    fn emit(
        &mut self,
        c: u64,
        sdm: &SequenceMemory,
        wdm: &WaveformMemory,
        inputs: CycleInputs,
        log: &mut EventLog,
    ) -> Result<SampleWord, Fault> {
        let entry = sdm.entries()[self.current as usize];
        if self.pass_pending {
            if c < self.ready_at {
                if !self.starving {
                    self.starving = true;
                    self.starvation_events += 1;
                }
                self.starved_cycles += 1;
                return Ok(SampleWord::idle(0));
            }
            self.starving = false;
            if entry.length == 0 {
                return Err(Fault::EmptySegment {
                    entry: self.current,
                });
            }
            if let Some(kind) = self.pending_event.take() {
                self.log(log, c, kind);
            }
            let last_pass = !self.infinite && self.repeats_left <= 1;
            self.prefetched = Some(if last_pass {
                self.successor(&entry, sdm)?
            } else {
                Successor::Entry(self.current)
            });
            self.ready_at = c + PREFETCH_LATENCY_CYCLES;
            self.pass_pending = false;
        }

        let addr = entry.start_addr as u64 + self.word_ptr as u64;
        let samples = *wdm.word(addr).ok_or(Fault::AddressOutOfRange {
            entry: self.current,
            addr,
        })?;
        self.word_ptr += 1;
        self.executed_words += 1;
        if self.word_ptr >= entry.length {
            self.finish_pass(c, &entry, samples[SAMPLES_PER_WORD - 1], sdm, inputs, log);
        }
        Ok(SampleWord {
            samples,
            valid: true,
        })
    }

    fn successor(&self, entry: &SequenceEntry, sdm: &SequenceMemory) -> Result<Successor, Fault> {
        if entry.flags.contains(EntryFlags::END_OF_SEQUENCE) {
            Ok(Successor::End)
        } else if entry.flags.contains(EntryFlags::JUMP) {
            if (entry.jump_target as usize) < sdm.len() {
                Ok(Successor::Entry(entry.jump_target))
            } else {
                Err(Fault::BadJump {
                    entry: self.current,
                    target: entry.jump_target,
                })
            }
        } else if (self.current as usize + 1) < sdm.len() {
            Ok(Successor::Entry(self.current + 1))
        } else {
            Err(Fault::FallsOffEnd {
                entry: self.current,
            })
        }
    }

    fn finish_pass(
        &mut self,
        c: u64,
        entry: &SequenceEntry,
        last_sample: SampleCode,
        sdm: &SequenceMemory,
        inputs: CycleInputs,
        log: &mut EventLog,
    ) {
        self.word_ptr = 0;
        self.hold = if entry.flags.contains(EntryFlags::HOLD_LAST) {
            last_sample
        } else {
            0
        };
        match self.prefetched.take() {
            Some(Successor::Entry(next))
                if next == self.current && (self.infinite || self.repeats_left > 1) =>
            {
                if !self.infinite {
                    self.repeats_left -= 1;
                }
                self.pass_pending = true;
                self.pending_event = Some(EventKind::RepeatWrap);
            }
            Some(Successor::Entry(next)) => {
                let e = sdm.entries()[next as usize];
                self.current = next;
                self.load_repeats(&e);
                self.pass_pending = true;
                self.pending_event = Some(EventKind::SegmentSwitch);
                if e.flags.contains(EntryFlags::WAIT_TRIGGER) {
                    self.status = ChannelStatus::ArmedWaitingTrigger;
                    self.start_at = inputs
                        .fires(e.trigger_source)
                        .then_some(c + TRIGGER_LATENCY_CYCLES);
                }
            }
            Some(Successor::End) | None => {
                // the idle descriptor goes through the same prefetch path
                if self.ready_at > c + 1 {
                    self.starvation_events += 1;
                }
                self.status = ChannelStatus::Done;
                self.log(log, c + 1, EventKind::Done);
            }
        }
    }

    fn load_repeats(&mut self, e: &SequenceEntry) {
        self.infinite = e.counter == 0;
        self.repeats_left = e.counter;
    }

    #[inline]
    fn log(&self, log: &mut EventLog, cycle: u64, kind: EventKind) {
        log.push(Event {
            cycle,
            channel: self.channel,
            kind,
            entry_index: self.current,
        });
    }
}

/// Trigger edges by cycle number, one sorted list per source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TriggerSchedule {
    pub external: Vec<u64>,
    pub software: Vec<u64>,
    pub timer: Vec<u64>,
}

impl TriggerSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn external(cycles: impl IntoIterator<Item = u64>) -> Self {
        Self::from_lists(cycles.into_iter().collect(), vec![], vec![])
    }

    pub fn software(cycles: impl IntoIterator<Item = u64>) -> Self {
        Self::from_lists(vec![], cycles.into_iter().collect(), vec![])
    }

    pub fn from_lists(mut external: Vec<u64>, mut software: Vec<u64>, mut timer: Vec<u64>) -> Self {
        for v in [&mut external, &mut software, &mut timer] {
            v.sort_unstable();
            v.dedup();
        }
        TriggerSchedule {
            external,
            software,
            timer,
        }
    }

    fn list(&self, source: TriggerSource) -> &[u64] {
        match source {
            TriggerSource::None => &[],
            TriggerSource::External => &self.external,
            TriggerSource::Software => &self.software,
            TriggerSource::InternalTimer => &self.timer,
        }
    }

    /// First edge of `source` at or after `cycle`.
    pub fn next_edge(&self, source: TriggerSource, cycle: u64) -> Option<u64> {
        let list = self.list(source);
        let i = list.partition_point(|&t| t < cycle);
        list.get(i).copied()
    }

    pub fn cursor(&self) -> TriggerCursor<'_> {
        TriggerCursor {
            schedule: self,
            pos: [0; 3],
        }
    }
}

/// Walks a schedule cycle by cycle in increasing order.
pub struct TriggerCursor<'a> {
    schedule: &'a TriggerSchedule,
    pos: [usize; 3],
}

impl TriggerCursor<'_> {
    #[inline]
    pub fn inputs_at(&mut self, cycle: u64) -> CycleInputs {
        let lists = [
            &self.schedule.external,
            &self.schedule.software,
            &self.schedule.timer,
        ];
        let mut hit = [false; 3];
        for (k, list) in lists.iter().enumerate() {
            let p = &mut self.pos[k];
            while *p < list.len() && list[*p] < cycle {
                *p += 1;
            }
            hit[k] = *p < list.len() && list[*p] == cycle;
        }
        CycleInputs {
            external_trigger: hit[0],
            software_trigger: hit[1],
            timer_fire: hit[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// The program reached END; `cycles` words were produced.
    Completed { cycles: u64 },
    /// Stopped at the cycle cap without reaching END.
    MaxCyclesExceeded { cycles: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramRun {
    pub words: Vec<SampleWord>,
    pub log: EventLog,
    pub outcome: RunOutcome,
    pub starvation_events: u64,
}

impl ProgramRun {
    pub fn valid_words(&self) -> usize {
        self.words.iter().filter(|w| w.valid).count()
    }

    /// Invalid cycles strictly between the first and last valid word.
    pub fn interior_gaps(&self) -> usize {
        let first = self.words.iter().position(|w| w.valid);
        let last = self.words.iter().rposition(|w| w.valid);
        match (first, last) {
            (Some(a), Some(b)) => self.words[a..=b].iter().filter(|w| !w.valid).count(),
            _ => 0,
        }
    }

    /// Flattened sample stream.
    pub fn samples(&self) -> Vec<SampleCode> {
        self.words.iter().flat_map(|w| w.samples).collect()
    }
}

/// Arms channel 0 at cycle 0 and runs until END or `max_cycles`.
///
/// The program is not validated; a memory fault aborts the run.
pub fn run_program(
    sdm: &SequenceMemory,
    wdm: &WaveformMemory,
    triggers: &TriggerSchedule,
    max_cycles: u64,
) -> Result<ProgramRun, SequencerError> {
    let mut seq = ChannelSequencer::new(sdm.channel());
    seq.arm(sdm)?;
    let mut log = EventLog::new();
    let mut words = Vec::new();
    let mut cursor = triggers.cursor();
    let outcome = loop {
        let c = seq.cycle();
        if seq.status() == ChannelStatus::Done {
            break RunOutcome::Completed { cycles: c };
        }
        if c >= max_cycles {
            break RunOutcome::MaxCyclesExceeded { cycles: c };
        }
        words.push(seq.step(sdm, wdm, cursor.inputs_at(c), &mut log)?);
    };
    Ok(ProgramRun {
        words,
        log,
        outcome,
        starvation_events: seq.starvation_events(),
    })
}

/// Runs exactly `cycles` cycles, continuing to emit idle words after END.
pub fn run_for(
    sdm: &SequenceMemory,
    wdm: &WaveformMemory,
    triggers: &TriggerSchedule,
    cycles: u64,
) -> Result<(Vec<SampleWord>, EventLog), SequencerError> {
    let mut seq = ChannelSequencer::new(sdm.channel());
    seq.arm(sdm)?;
    let mut log = EventLog::new();
    let mut words = Vec::with_capacity(cycles as usize);
    let mut cursor = triggers.cursor();
    for c in 0..cycles {
        words.push(seq.step(sdm, wdm, cursor.inputs_at(c), &mut log)?);
    }
    Ok((words, log))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("program does not terminate under the trigger schedule")]
    NonTerminating,
    #[error("{0}")]
    Fault(Fault),
}

/// Expected output by naive expansion: segments concatenated, repeat
/// counters unrolled, wait gaps inserted from the trigger schedule. Shares no
/// code with the FSM.
///
/// With `cap = Some(n)` the expansion stops after `n` words, which makes
/// infinite programs expandable.
pub fn flatten_oracle(
    sdm: &SequenceMemory,
    wdm: &WaveformMemory,
    triggers: &TriggerSchedule,
    cap: Option<u64>,
) -> Result<Vec<SampleWord>, OracleError> {
    let entries = sdm.entries();
    let cap = cap.unwrap_or(u64::MAX) as usize;
    let unbounded = cap == usize::MAX;
    let mut out: Vec<SampleWord> = Vec::new();
    let mut hold: SampleCode = 0;
    let mut i = 0usize;
    let mut first = true;
    let mut since_wait: Vec<bool> = vec![false; entries.len()];

    'outer: loop {
        if out.len() >= cap {
            break;
        }
        let e = *entries
            .get(i)
            .ok_or(OracleError::Fault(Fault::FallsOffEnd {
                entry: i.saturating_sub(1) as u16,
            }))?;

        if e.flags.contains(EntryFlags::WAIT_TRIGGER) {
            // an edge on the last cycle of the previous segment still counts
            let from = if first { 0 } else { out.len() as u64 - 1 };
            match triggers.next_edge(e.trigger_source, from) {
                Some(t) => {
                    let start = (t + TRIGGER_LATENCY_CYCLES) as usize;
                    while out.len() < start.min(cap) {
                        out.push(SampleWord::idle(hold));
                    }
                }
                None if unbounded => return Err(OracleError::NonTerminating),
                None => {
                    while out.len() < cap {
                        out.push(SampleWord::idle(hold));
                    }
                    break;
                }
            }
            since_wait.iter_mut().for_each(|s| *s = false);
        } else if since_wait[i] && unbounded {
            return Err(OracleError::NonTerminating);
        }
        since_wait[i] = true;
        first = false;

        if e.counter == 0 && unbounded {
            return Err(OracleError::NonTerminating);
        }
        if e.length == 0 {
            return Err(OracleError::Fault(Fault::EmptySegment { entry: i as u16 }));
        }
        let reps = if e.counter == 0 {
            u64::MAX
        } else {
            e.counter as u64
        };
        let mut last = 0;
        for _ in 0..reps {
            for w in 0..e.length as u64 {
                if out.len() >= cap {
                    break 'outer;
                }
                let addr = e.start_addr as u64 + w;
                let base = addr as usize * SAMPLES_PER_WORD;
                let samples: [SampleCode; SAMPLES_PER_WORD] = wdm
                    .samples()
                    .get(base..base + SAMPLES_PER_WORD)
                    .ok_or(OracleError::Fault(Fault::AddressOutOfRange {
                        entry: i as u16,
                        addr,
                    }))?
                    .try_into()
                    .unwrap();
                last = samples[SAMPLES_PER_WORD - 1];
                out.push(SampleWord {
                    samples,
                    valid: true,
                });
            }
        }
        hold = if e.flags.contains(EntryFlags::HOLD_LAST) {
            last
        } else {
            0
        };

        if e.flags.contains(EntryFlags::END_OF_SEQUENCE) {
            break;
        }
        if e.flags.contains(EntryFlags::JUMP) {
            if e.jump_target as usize >= entries.len() {
                return Err(OracleError::Fault(Fault::BadJump {
                    entry: i as u16,
                    target: e.jump_target,
                }));
            }
            i = e.jump_target as usize;
        } else {
            if i + 1 >= entries.len() {
                return Err(OracleError::Fault(Fault::FallsOffEnd { entry: i as u16 }));
            }
            i += 1;
        }
    }
    Ok(out)
}
