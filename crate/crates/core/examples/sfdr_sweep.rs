// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! 25-point SFDR sweep of a DAC with a third-order nonlinearity.

use awgsim::frontend::{profiles, DacTransfer, DEFAULT_FULLSCALE_V};
use awgsim::metrology::sfdr_sweep;
use awgsim::metrology::spectrum::FULL_SCALE_AMPLITUDE;
use awgsim::protocol::{loopback_client, Board};

fn main() {
    let mut board = Board::new(0);
    let dac = DacTransfer::with_profile(
        DEFAULT_FULLSCALE_V,
        profiles::harmonic(3, -60.0, FULL_SCALE_AMPLITUDE),
    )
    .unwrap();
    board.set_dac(0, &dac);
    let mut client = loopback_client(board);
    println!("nominal_MHz  actual_MHz  bin  SFDR_dBc");
    for t in sfdr_sweep(&mut client, 0, FULL_SCALE_AMPLITUDE).unwrap() {
        let p = t.point;
        println!(
            "{:>11.1} {:>11.4} {:>4} {:>9.3}",
            p.nominal_hz / 1e6,
            p.frequency_hz / 1e6,
            p.bin,
            p.sfdr_dbc
        );
    }
}
