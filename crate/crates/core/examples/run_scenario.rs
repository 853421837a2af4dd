// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Run a bundled scenario from code instead of the command line.

use std::path::Path;

use awgsim::scenario::{run_scenario, Connection, Emit, RunOptions, Scenario};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/seamless.toml");
    let scenario = Scenario::load(&path).unwrap();
    let out = std::env::temp_dir().join("awgsim-example-reports");
    let outcome = run_scenario(
        &scenario,
        &RunOptions {
            seed: None,
            out_dir: out,
            connection: Connection::Listen("127.0.0.1:0".into()),
            emit: Emit::Both,
            threads: None,
        },
    )
    .unwrap();
    print!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
}
