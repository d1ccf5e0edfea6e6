// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pulseforge::fidelity::{avg_gate_fidelity, six_state_fidelity};
use pulseforge::noise::{
    fast_noise_infidelity, quasistatic_infidelity_dbz, quasistatic_infidelity_eps, ToggledCoefficients,
};
use pulseforge::{DeviceModel, GateTarget, NoiseModel, PulseSequence, Unitary2};

fn random_unitary(rng: &mut ChaCha8Rng) -> Unitary2 {
    // normalized complex Gaussian columns, Gram-Schmidt
    let mut g = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let (a0, a1, b0, b1) = (g(), g(), g(), g());
    let na = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    let (a0, a1) = (a0 / na, a1 / na);
    let p = a0.conj() * b0 + a1.conj() * b1;
    let (b0, b1) = (b0 - p * a0, b1 - p * a1);
    let nb = (b0.norm_sqr() + b1.norm_sqr()).sqrt();
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    Unitary2::from_matrix([[a0 * phase, b0 / nb * phase], [a1 * phase, b1 / nb * phase]]).unwrap()
}

#[test]
fn six_state_average_equals_trace_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    for _ in 0..1000 {
        let (u, t) = (random_unitary(&mut rng), random_unitary(&mut rng));
        let tr = {
            let (a, b) = (t.matrix(), u.matrix());
            let mut s = C64::new(0.0, 0.0);
            for i in 0..2 {
                for k in 0..2 {
                    s += a[k][i].conj() * b[k][i];
                }
            }
            s
        };
        let formula = (tr.norm_sqr() + 2.0) / 6.0;
        let six = six_state_fidelity(&[u], &t).unwrap();
        assert!((six - formula).abs() < 1e-12, "{six} vs {formula}");
        assert!((avg_gate_fidelity(&u, &t).unwrap() - formula).abs() < 1e-12);
        assert_eq!(avg_gate_fidelity(&u, &u).unwrap(), 1.0);
    }
}

fn test_pulse() -> PulseSequence {
    let eps = vec![-600.0, -250.0, 120.0, 300.0, -50.0, -900.0, -400.0, 200.0, 340.0, -100.0, -700.0, -1100.0];
    let p = PulseSequence::new(eps, 1, GateTarget::x90(), DeviceModel::default()).unwrap();
    p.with_target(GateTarget::from_rotation(&p.propagate().decompose()))
}

#[test]
fn all_channels_scale_quadratically() {
    let p = test_pulse();
    let m = NoiseModel::default();
    let half = m.scaled(0.5);
    let pairs = [
        (quasistatic_infidelity_dbz(&p, &m), quasistatic_infidelity_dbz(&p, &half)),
        (quasistatic_infidelity_eps(&p, &m), quasistatic_infidelity_eps(&p, &half)),
        (fast_noise_infidelity(&p, &m), fast_noise_infidelity(&p, &half)),
    ];
    for (full, h) in pairs {
        assert!(full > 0.0 && full < 1e-2, "{full}");
        let ratio = h / full;
        assert!((ratio - 0.25).abs() < 0.02 * 0.25, "ratio {ratio}");
    }
}

#[test]
fn dc_filter_value_matches_small_quasistatic_offsets() {
    let p = test_pulse();
    let sigma = 0.5;
    let m = NoiseModel { sigma_eps: sigma, ..NoiseModel::default() };
    let qs = quasistatic_infidelity_eps(&p, &m);
    let coeffs = ToggledCoefficients::from_pulse(&p);
    // a rotation error θ costs θ²/6; a static offset δ rotates by 2δ·|∫ g R dt|
    let predicted = 2.0 / 3.0 * sigma * sigma * coeffs.dc();
    assert!((qs - predicted).abs() < 0.05 * predicted, "{qs} vs {predicted}");
    let near_dc = coeffs.filter_value(2.0 * std::f64::consts::PI * 1e3 * 1e-9);
    assert!((near_dc - coeffs.dc()).abs() < 1e-6 * coeffs.dc());
}
