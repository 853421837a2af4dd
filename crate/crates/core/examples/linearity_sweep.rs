// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Full-code staircase through the command protocol, reduced to INL/DNL.

use std::time::Instant;

use awgsim::frontend::{profiles, DacTransfer, DEFAULT_FULLSCALE_V};
use awgsim::metrology::linearity::{endpoint_fit, DEFAULT_DWELL_CYCLES};
use awgsim::metrology::{compute_inl_dnl, ramp_sweep};
use awgsim::protocol::{loopback_client, Board};

fn main() {
    let profile = profiles::smooth_random(1.8, 9);
    let mut board = Board::new(0);
    board.set_dac(
        0,
        &DacTransfer::with_profile(DEFAULT_FULLSCALE_V, profile.clone()).unwrap(),
    );
    let mut client = loopback_client(board);

    let t0 = Instant::now();
    let volts = ramp_sweep(&mut client, 0, DEFAULT_DWELL_CYCLES).unwrap();
    let r = compute_inl_dnl(&volts).unwrap();
    println!("sweep of {} codes in {:.2?}", volts.len(), t0.elapsed());
    println!("lsb = {:.6e} V", r.lsb);
    println!(
        "max |INL| = {:.6} LSB, max |DNL| = {:.6} LSB",
        r.max_abs_inl, r.max_abs_dnl
    );
    let err = r
        .inl
        .iter()
        .zip(endpoint_fit(&profile))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("worst difference from the injected profile: {err:.3e} LSB");
    println!("within 2 LSB: {}", r.passes(2.0));
}
