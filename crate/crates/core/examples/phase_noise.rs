// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Jitter-limited phase noise and its 20 log10 scaling with carrier.

use awgsim::frontend::TimingModel;
use awgsim::metrology::phase_noise::{
    analytic_phase_noise, measure_phase_noise, phase_noise_scaling_check, DEFAULT_OFFSETS_HZ,
};
use awgsim::SAMPLE_RATE_HZ;

fn main() {
    let timing = TimingModel {
        jitter_sigma: 10e-12,
        rng_seed: 5,
        ..Default::default()
    };
    let curves: Vec<_> = [100e6, 200e6, 400e6]
        .iter()
        .map(|&f| measure_phase_noise(f, timing, 8, &DEFAULT_OFFSETS_HZ).unwrap())
        .collect();
    for c in &curves {
        let a = analytic_phase_noise(
            c.carrier_hz,
            timing.jitter_sigma,
            SAMPLE_RATE_HZ,
            &DEFAULT_OFFSETS_HZ,
        );
        println!(
            "carrier {:.0} MHz (analytic floor {:.1} dBc/Hz)",
            c.carrier_hz / 1e6,
            a.dbc_hz[0]
        );
        for (o, l) in c.offsets_hz.iter().zip(&c.dbc_hz) {
            println!("  {:>5.0} MHz  {:.2} dBc/Hz", o / 1e6, l);
        }
    }
    for c in &curves[1..] {
        let shift = phase_noise_scaling_check(&curves[0], c).unwrap();
        println!(
            "{:.0} -> {:.0} MHz: {:+.2} dB (ideal {:+.2} dB)",
            curves[0].carrier_hz / 1e6,
            c.carrier_hz / 1e6,
            shift,
            20.0 * (c.carrier_hz / curves[0].carrier_hz).log10()
        );
    }
}
