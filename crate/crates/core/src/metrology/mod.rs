// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Analysis of simulated outputs: DAC linearity, spurious-free dynamic
//! range, multi-channel jitter and skew, and phase-noise scaling. The
//! measurement procedures that need a board drive it through the command
//! protocol like a bench script would.

pub mod jitter;
pub mod linearity;
pub mod phase_noise;
pub mod report;
pub mod spectrum;

use thiserror::Error;

use crate::frontend::FrontendError;
use crate::protocol::ClientError;
use crate::sequencer::SequencerError;
use crate::sync::SyncError;

pub use jitter::{jitter_statistics, JitterReport};
pub use linearity::{compute_inl_dnl, ramp_sweep, LinearityReport};
pub use phase_noise::{
    analytic_phase_noise, measure_phase_noise, phase_noise_scaling_check, PhaseNoiseCurve,
};
pub use report::{Bound, Summary};
pub use spectrum::{compute_sfdr, sfdr_sweep, SfdrPoint};

#[derive(Debug, Error)]
pub enum MetrologyError {
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("record length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{f0} Hz is not on a bin of the {n}-point record")]
    NonCoherent { f0: f64, n: usize },
    #[error("channel {channel} has {events} events; at least 2 needed")]
    TooFewEvents { channel: usize, events: usize },
    #[error("channel {channel} has {got} events, channel 0 has {expected}")]
    MismatchedEvents {
        channel: usize,
        expected: usize,
        got: usize,
    },
    #[error("phase-noise curves use different offset grids")]
    MismatchedGrids,
    #[error("dwell of {0} cycles is not a positive multiple of 4")]
    BadDwell(u32),
    #[error("capture returned {got} samples, expected {expected}")]
    ShortCapture { expected: usize, got: usize },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Sequencer(#[from] SequencerError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Sync(#[from] SyncError),
}
