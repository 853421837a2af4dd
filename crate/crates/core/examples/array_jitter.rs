// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Trigger-to-edge jitter and skew over a 40-channel array.

use std::time::Instant;

use awgsim::metrology::jitter::{expected_skew_ps, measure_array_jitter, ArrayJitterConfig};
use awgsim::sync::BoardTopology;

const TOPOLOGY: &str = r#"
format = "awgsim-topology/1"
rng_seed = 2026

[generate]
boards = 10
fanout_step_ps = 50
skew_span_ps = 100
sigma_min_ps = 9.2
sigma_max_ps = 10.9
"#;

fn main() {
    let topo = BoardTopology::from_toml_str(TOPOLOGY).unwrap();
    let t0 = Instant::now();
    let r = measure_array_jitter(&topo, &ArrayJitterConfig::default()).unwrap();
    println!(
        "{} channels x {} events in {:.2?}",
        r.channels(),
        r.events,
        t0.elapsed()
    );
    println!(
        "std: min {:.3} ps, mean {:.3} ps, max {:.3} ps",
        r.min_std_ps, r.mean_std_ps, r.max_std_ps
    );
    let want = expected_skew_ps(&topo);
    let n = r.channels() - 1;
    println!(
        "skew ch{n} - ch0: measured {:.3} ps, configured {:.3} ps",
        r.skew_ps[n][0], want[n][0]
    );
}
