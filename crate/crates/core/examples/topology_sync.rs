// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Trigger fan-out across two boards and the resulting capture cycles.

use awgsim::sync::{distribute_trigger, BoardTopology};

const TOPOLOGY: &str = r#"
format = "awgsim-topology/1"
clock_hz = 250e6
pipeline_delay = 2
rng_seed = 1

[[board]]
fanout_delay_ps = 0.0
skew_ps = [0.0, 25.0, 50.0, 100.0]
jitter_sigma_ps = [10.0, 10.0, 10.0, 10.0]

[[board]]
fanout_delay_ps = 3900.0
skew_ps = [0.0, 0.0, 0.0, 0.0]
jitter_sigma_ps = [10.0, 10.0, 10.0, 10.0]
"#;

fn main() {
    let topo = BoardTopology::from_toml_str(TOPOLOGY).unwrap();
    let event = 1e-6 + 2e-9;
    println!("board ch   arrival_ns  cycle  wait_ps");
    for a in distribute_trigger(event, &topo).unwrap() {
        println!(
            "{:>5} {:>2} {:>12.4} {:>6} {:>8.1}",
            a.channel.board,
            a.channel.channel,
            a.time * 1e9,
            a.cycle,
            a.quantization * 1e12
        );
    }
    print!("\n{}", topo.to_toml_string());
}
