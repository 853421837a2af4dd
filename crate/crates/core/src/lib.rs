// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Bit-accurate simulator of a sequencer-driven arbitrary waveform generator.
//!
//! A board carries four 16-bit channels running at 2 GSPS. Each channel has a
//! waveform data memory (WDM), a sequence data memory (SDM) and a small state
//! machine that streams one 8-sample word per 250 MHz clock cycle, prefetching
//! the next instruction so that consecutive segments splice without a gap.
//!
//! The crate is organised the way the hardware is:
//!
//! * [`memory`]: WDM/SDM images, the 16-byte instruction encoding and program
//!   validation.
//! * [`sequencer`]: the cycle-accurate FSM, the event log and a brute-force
//!   expansion oracle.
//! * [`frontend`]: DAC transfer law, reconstruction filter, IQ mixer plate and
//!   the timing model (deterministic latency, skew, jitter).
//! * [`sync`]: multi-board topology, trigger fan-out and array runs.
//! * [`protocol`]: the host command protocol, the board server and a client.
//! * [`metrology`]: INL/DNL, SFDR, jitter and phase-noise analysis.
//! * [`scenario`]: scripted measurement campaigns driven over the protocol.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod frontend;
pub mod memory;
pub mod metrology;
pub mod protocol;
pub mod scenario;
pub mod sequencer;
pub mod sync;

/// Samples carried by one word-clock cycle.
pub const SAMPLES_PER_WORD: usize = 8;
/// DAC sample rate.
pub const SAMPLE_RATE_HZ: f64 = 2.0e9;
/// Sequencer (word) clock.
pub const WORD_CLOCK_HZ: f64 = 250.0e6;
pub const SAMPLE_PERIOD_S: f64 = 1.0 / SAMPLE_RATE_HZ;
pub const WORD_PERIOD_S: f64 = 1.0 / WORD_CLOCK_HZ;
pub const CHANNELS_PER_BOARD: usize = 4;

pub use memory::{
    decode_entry, encode_entry, validate_program, EntryFlags, MemoryError, Rule, SampleCode,
    SequenceEntry, SequenceMemory, TriggerSource, ValidationReport, Violation, WaveformMemory,
};
pub use sequencer::{
    flatten_oracle, run_for, run_program, ChannelSequencer, ChannelStatus, CycleInputs, Event,
    EventKind, EventLog, ProgramRun, RunOutcome, SampleWord, TriggerSchedule,
};
