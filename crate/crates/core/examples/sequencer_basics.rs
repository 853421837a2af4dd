// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Build a three-entry program, validate it and run it cycle by cycle.

use awgsim::{
    run_program, validate_program, EntryFlags, SequenceEntry, SequenceMemory, TriggerSchedule,
    TriggerSource, WaveformMemory,
};

fn main() {
    let mut wdm = WaveformMemory::new(0);
    let ramp: Vec<i16> = (0..128).map(|k| (k * 200) as i16).collect();
    wdm.load_waveform(0, &ramp).unwrap();

    let sdm = SequenceMemory::from_entries(
        0,
        vec![
            SequenceEntry::segment(0, 4),
            SequenceEntry::segment(4, 4)
                .with_counter(3)
                .wait_for(TriggerSource::Software),
            SequenceEntry::segment(8, 8)
                .with_flags(EntryFlags::HOLD_LAST)
                .end(),
        ],
    )
    .unwrap();

    let report = validate_program(&sdm, &wdm);
    println!("validation ok: {}", report.is_ok());

    let run = run_program(&sdm, &wdm, &TriggerSchedule::software([10]), 1000).unwrap();
    println!("outcome: {:?}", run.outcome);
    println!(
        "valid words: {}, words emitted: {}",
        run.valid_words(),
        run.words.len()
    );
    println!("starvation events: {}", run.starvation_events);
    print!("{}", run.log.to_csv());

    let bad = SequenceMemory::from_entries(0, vec![SequenceEntry::segment(0, 3).end()]).unwrap();
    for v in &validate_program(&bad, &wdm).violations {
        println!("rejected: {v:?}");
    }
}
