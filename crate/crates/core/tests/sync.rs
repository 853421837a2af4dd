// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Multi-board trigger distribution and array runs.

use std::time::{Duration, Instant};

use awgsim::frontend::DacTransfer;
use awgsim::metrology::jitter::{event_times, pulse_program, ArrayJitterConfig, PULSE_CODE};
use awgsim::sync::{distribute_trigger, run_array, run_channel, BoardTopology, ChannelProgram};
use proptest::prelude::*;

fn skewed(boards: usize, sigma: f64) -> BoardTopology {
    let mut topo = BoardTopology::uniform(boards);
    topo.rng_seed = 99;
    for b in 0..boards {
        topo.boards[b].fanout_delay = b as f64 * 37e-12;
    }
    let ids: Vec<_> = topo.channels().collect();
    for id in ids {
        let ch = topo.channel_mut(id);
        ch.skew = (id.global() as f64 * 13.0 % 90.0) * 1e-12;
        ch.jitter_sigma = sigma;
    }
    topo
}

fn programs(topo: &BoardTopology) -> Vec<ChannelProgram> {
    topo.channels().map(|id| pulse_program(id.channel as u8)).collect()
}

fn config(events: usize) -> ArrayJitterConfig {
    ArrayJitterConfig {
        events,
        ..ArrayJitterConfig::default()
    }
}

fn cycles_for(cfg: &ArrayJitterConfig) -> u64 {
    4 + cfg.events as u64 * cfg.spacing_cycles + 16
}

#[test]
fn array_run_is_the_composition_of_channel_runs() {
    let topo = skewed(3, 10e-12);
    let progs = programs(&topo);
    let refs: Vec<&ChannelProgram> = progs.iter().collect();
    let cfg = config(200);
    let events = event_times(&topo, &cfg);
    let run = run_array(&topo, &refs, &events, cycles_for(&cfg), 3).unwrap();
    assert_eq!(run.channels.len(), 12);
    for id in topo.channels() {
        let arrivals: Vec<u64> = events
            .iter()
            .map(|&e| distribute_trigger(e, &topo).unwrap()[id.global()].cycle)
            .collect();
        let alone = run_channel(id, refs[id.global()], topo.timing_model(id), arrivals, cycles_for(&cfg)).unwrap();
        assert_eq!(run.channels[id.global()], alone, "{id:?}");
    }
}

#[test]
fn edges_differ_by_arrival_cycle_and_skew_without_jitter() {
    let topo = skewed(2, 0.0);
    let progs = programs(&topo);
    let refs: Vec<&ChannelProgram> = progs.iter().collect();
    let cfg = config(50);
    let events = event_times(&topo, &cfg);
    let run = run_array(&topo, &refs, &events, cycles_for(&cfg), 1).unwrap();
    let threshold = DacTransfer::ideal().convert(PULSE_CODE) / 2.0;
    let edges = run.rising_edges(&refs, threshold, 1).unwrap();
    let t = topo.word_period();
    for (e, &time) in events.iter().enumerate() {
        let arrivals = distribute_trigger(time, &topo).unwrap();
        for id in topo.channels() {
            let g = id.global();
            let expect = (arrivals[g].cycle as f64 - arrivals[0].cycle as f64) * t
                + topo.channel(id).skew
                - topo.channel(topo.channels().next().unwrap()).skew;
            let got = edges[g][e] - edges[0][e];
            assert!((got - expect).abs() < 1e-15, "event {e} channel {g}: {got} vs {expect}");
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let topo = skewed(4, 10e-12);
    let progs = programs(&topo);
    let refs: Vec<&ChannelProgram> = progs.iter().collect();
    let cfg = config(300);
    let events = event_times(&topo, &cfg);
    let one = run_array(&topo, &refs, &events, cycles_for(&cfg), 1).unwrap();
    let many = run_array(&topo, &refs, &events, cycles_for(&cfg), 7).unwrap();
    assert_eq!(one, many);
    let threshold = DacTransfer::ideal().convert(PULSE_CODE) / 2.0;
    assert_eq!(
        one.rising_edges(&refs, threshold, 1).unwrap(),
        many.rising_edges(&refs, threshold, 5).unwrap()
    );
}

fn best_of(n: usize, mut f: impl FnMut()) -> Duration {
    (0..n)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn cost_grows_linearly_with_channel_count() {
    let cfg = config(2000);
    let cost = |boards: usize| {
        let topo = skewed(boards, 10e-12);
        let progs = programs(&topo);
        let refs: Vec<&ChannelProgram> = progs.iter().collect();
        let events = event_times(&topo, &cfg);
        let threshold = DacTransfer::ideal().convert(PULSE_CODE) / 2.0;
        best_of(3, || {
            let run = run_array(&topo, &refs, &events, cycles_for(&cfg), 1).unwrap();
            run.rising_edges(&refs, threshold, 1).unwrap();
        })
    };
    let small = cost(1);
    let large = cost(10);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    // ten times the channels; allow overhead but nothing super-linear
    assert!(ratio < 15.0, "10 boards cost {ratio:.2}x one board");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arrivals_are_never_early_and_quantize_within_a_cycle(
        event_ps in 0u64..5_000_000,
        fanouts in proptest::collection::vec(0u32..2000, 1..4),
        skew_ps in 0u32..500,
    ) {
        let mut topo = BoardTopology::uniform(fanouts.len());
        for (b, f) in fanouts.iter().enumerate() {
            topo.boards[b].fanout_delay = *f as f64 * 1e-12;
            topo.boards[b].channels[1].skew = skew_ps as f64 * 1e-12;
        }
        let t = topo.word_period();
        let event = event_ps as f64 * 1e-12;
        for a in distribute_trigger(event, &topo).unwrap() {
            prop_assert!(a.quantization >= 0.0);
            prop_assert!(a.quantization < t);
            prop_assert!(a.cycle as f64 * t >= a.time - 1e-15);
            prop_assert!((a.cycle as f64 * t - a.time - a.quantization).abs() < 1e-15);
        }
    }
}
