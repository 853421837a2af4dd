// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Random programs through the cycle-accurate sequencer and the expansion
//! oracle: identical output, no gap between segments.

use awgsim::scenario::ProgramCase;
use awgsim::{flatten_oracle, run_for, TriggerSchedule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut words = 0usize;
    for i in 0..1000 {
        let case = ProgramCase::random(&mut rng);
        let (sdm, wdm) = case.memories(0).unwrap();
        let triggers = TriggerSchedule::software(case.software_triggers.iter().copied());
        let oracle = flatten_oracle(&sdm, &wdm, &triggers, Some(case.cycles)).unwrap();
        let (fsm, _) = run_for(&sdm, &wdm, &triggers, oracle.len() as u64).unwrap();
        assert_eq!(fsm, oracle, "program {i} differs");
        words += oracle.len();
    }
    println!("1000 programs, {words} words, identical to the oracle");
}
