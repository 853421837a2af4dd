// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Two channels as I and Q into one mixer: a single sideband at LO + f_if.

use awgsim::frontend::{iq_upconvert_stream, DacTransfer, FirFilter, IqPlate};
use awgsim::metrology::spectrum::{power_spectrum, sine_codes};
use awgsim::SAMPLE_RATE_HZ;

fn main() {
    let n = 4096;
    let bin = 205; // 100.1 MHz
    let dac = DacTransfer::ideal();
    let i: Vec<f64> = sine_codes(n, bin, 30000.0, std::f64::consts::FRAC_PI_2)
        .iter()
        .map(|&c| dac.convert(c))
        .collect();
    let q: Vec<f64> = sine_codes(n, bin, 30000.0, 0.0)
        .iter()
        .map(|&c| dac.convert(c))
        .collect();
    // filter two periods and keep the second, past the start-up transient
    let filt = FirFilter::default();
    let steady = |x: &[f64]| filt.apply(&[x, x].concat())[n..].to_vec();
    let (i, q) = (steady(&i), steady(&q));

    let lo_bin = 1024; // 500 MHz
    let plate = IqPlate::new(lo_bin as f64 * SAMPLE_RATE_HZ / n as f64, 1.0);
    let rf = iq_upconvert_stream(&i, &q, &plate, 0.0, SAMPLE_RATE_HZ);
    let p = power_spectrum(&rf[..]);
    let db = |k: usize| 10.0 * (p[k] / p[lo_bin + bin]).log10();
    println!("upper sideband (bin {}): 0.0 dB", lo_bin + bin);
    println!(
        "lower sideband (bin {}): {:.1} dB",
        lo_bin - bin,
        db(lo_bin - bin)
    );
    println!("LO feedthrough (bin {lo_bin}): {:.1} dB", db(lo_bin));
}
