// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulated bootstrap-tomography calibration of a π/2_x, π/2_{−y} gate pair.
//!
//! Six sequences are applied to the singlet `|0⟩` and `⟨σz⟩` is read out. To
//! first order the outcomes are linear in the gate errors:
//!
//! | sequence (rightmost first) | S                     |
//! |----------------------------|-----------------------|
//! | X                          | −2φ                   |
//! | Y                          | −2χ                   |
//! | Y·X                        | −n_y − n_z − v_x − v_z |
//! | X·Y                        | −n_y + n_z − v_x + v_z |
//! | X·X·X·Y                    | n_y + n_z + v_x − v_z  |
//! | Y·X·X·X                    | n_y − n_z + v_x + v_z  |
//!
//! with the x-gate rotating by `π/2 + 2φ` about `(1, −n_y, −n_z)` and the
//! y-gate by `π/2 + 2χ` about `(v_x, −1, −v_z)`, both normalized.

mod bench;
mod tuning;

pub use bench::{
    benchmark_success_rate, inject_errors, inject_into_bin, percentile, BenchmarkRow, BenchmarkRun, Injection,
    Mechanism, MAX_INJECTION_ATTEMPTS,
};
pub use tuning::{
    calibrate_loop, residuals_eq3, CalibrationConfig, CalibrationRecord, CalibrationState, Calibrator,
    NoiseWeights,
};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::fidelity::su2_fidelity;
use crate::model::{DeviceModel, GateTarget, PulseSequence};
use crate::unitary::Su2;

/// The "true" device the pulses run on, and the readout budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentModel {
    pub true_device: DeviceModel,
    /// rad/ns.
    pub true_dbz: f64,
    /// Single-shot measurements per sequence.
    pub shots: u64,
    pub seed: u64,
}

impl ExperimentModel {
    /// Experiment identical to the pulse's own model.
    pub fn matched(pulse: &PulseSequence, shots: u64, seed: u64) -> Self {
        ExperimentModel { true_device: *pulse.device(), true_dbz: pulse.dbz(), shots, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.true_device.validate()?;
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        if !(self.true_dbz.is_finite() && self.true_dbz > 0.0) {
            return Err(Error::InvalidParameter(format!("true_dbz must be positive, got {}", self.true_dbz)));
        }
        Ok(())
    }

    /// Noise-free gate of `pulse` on the true device, with the pulse's timing.
    pub fn gate(&self, pulse: &PulseSequence) -> Su2 {
        pulse.exchange_trace_with(&self.true_device).propagate(self.true_dbz)
    }
}

/// Rotation-angle and axis errors of the gate pair (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GateErrorParams {
    pub phi: f64,
    pub chi: f64,
    pub n_y: f64,
    pub n_z: f64,
    pub v_x: f64,
    pub v_z: f64,
}

/// Rows: S_1..S_6; columns: φ, χ, n_y, n_z, v_x, v_z.
pub const LINEAR_MAP: [[f64; 6]; 6] = [
    [-2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, -2.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, -1.0, -1.0, -1.0],
    [0.0, 0.0, -1.0, 1.0, -1.0, 1.0],
    [0.0, 0.0, 1.0, 1.0, 1.0, -1.0],
    [0.0, 0.0, 1.0, -1.0, 1.0, 1.0],
];

impl GateErrorParams {
    pub fn to_array(&self) -> [f64; 6] {
        [self.phi, self.chi, self.n_y, self.n_z, self.v_x, self.v_z]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        GateErrorParams { phi: a[0], chi: a[1], n_y: a[2], n_z: a[3], v_x: a[4], v_z: a[5] }
    }

    /// Error parameters of a gate pair, read off their rotations.
    pub fn from_gates(ux: &Su2, uy: &Su2) -> Self {
        let rx = ux.to_unitary().decompose();
        let ry = uy.to_unitary().decompose();
        GateErrorParams {
            phi: (rx.angle - FRAC_PI_2) / 2.0,
            chi: (ry.angle - FRAC_PI_2) / 2.0,
            n_y: -rx.axis[1] / rx.axis[0],
            n_z: -rx.axis[2] / rx.axis[0],
            v_x: -ry.axis[0] / ry.axis[1],
            v_z: ry.axis[2] / ry.axis[1],
        }
    }

    /// The gate pair these parameters describe.
    pub fn gates(&self) -> (Su2, Su2) {
        (
            Su2::rotation(FRAC_PI_2 + 2.0 * self.phi, [1.0, -self.n_y, -self.n_z]),
            Su2::rotation(FRAC_PI_2 + 2.0 * self.chi, [self.v_x, -1.0, -self.v_z]),
        )
    }

    /// First-order outcomes `L·p`.
    pub fn linear_outcomes(&self) -> [f64; 6] {
        let p = self.to_array();
        LINEAR_MAP.map(|row| row.iter().zip(&p).map(|(a, b)| a * b).sum())
    }
}

/// Exact `⟨σz⟩` of the six sequences.
pub fn sequence_outcomes(ux: &Su2, uy: &Su2) -> [f64; 6] {
    let (x, y) = (*ux, *uy);
    let z = |u: Su2| u.bloch_image_of_z()[2];
    [z(x), z(y), z(y * x), z(x * y), z(x * x * x * y), z(y * x * x * x)]
}

/// Binomial estimate `2k/shots − 1` of an expectation value.
pub fn sample_outcome(s: f64, shots: u64, rng: &mut impl Rng) -> f64 {
    let p = ((1.0 + s) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p).expect("p within [0, 1]").sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}

/// Bootstrap outcomes of the pair on the true device; `rng` is only used
/// when `exact` is false.
pub fn bootstrap_outcomes(
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    experiment: &ExperimentModel,
    exact: bool,
    rng: &mut impl Rng,
) -> [f64; 6] {
    let s = sequence_outcomes(&experiment.gate(pulse_x), &experiment.gate(pulse_y));
    if exact {
        s
    } else {
        s.map(|v| sample_outcome(v, experiment.shots, rng))
    }
}

/// Inverts the first-order map. `n_y` and `v_x` only enter as `n_y + v_x`
/// (a joint z-rotation of both axes leaves every outcome unchanged), so the
/// minimum-norm split `n_y = v_x` is returned.
pub fn fit_error_params(s: &[f64; 6]) -> GateErrorParams {
    // rows 3..6 in terms of a = n_y + v_x, n_z, v_z:
    //   S3 = −a − n_z − v_z, S4 = −a + n_z + v_z, S5 = a + n_z − v_z, S6 = a − n_z + v_z
    let a = (-s[2] - s[3] + s[4] + s[5]) / 4.0;
    let n_z = (-s[2] + s[3] + s[4] - s[5]) / 4.0;
    let v_z = (-s[2] + s[3] - s[4] + s[5]) / 4.0;
    GateErrorParams { phi: -s[0] / 2.0, chi: -s[1] / 2.0, n_y: a / 2.0, n_z, v_x: a / 2.0, v_z }
}

/// Systematic infidelity of each gate, minimized over a joint z-rotation.
pub fn pair_infidelity(ux: &Su2, uy: &Su2, tx: &GateTarget, ty: &GateTarget) -> [f64; 2] {
    let (tx, ty) = (tx.su2(), ty.su2());
    let per_gate = |g: f64| {
        let rz = Su2::rotation(g, [0.0, 0.0, 1.0]);
        let conj = |u: &Su2| rz * *u * rz.adjoint();
        [1.0 - su2_fidelity(&conj(ux), &tx), 1.0 - su2_fidelity(&conj(uy), &ty)]
    };
    let mean = |g: f64| {
        let v = per_gate(g);
        0.5 * (v[0] + v[1])
    };
    let n = 360;
    let step = TAU / n as f64;
    let best = (0..n).min_by(|&a, &b| mean(a as f64 * step).total_cmp(&mean(b as f64 * step))).unwrap();
    // golden section on the bracketing cell pair
    let (mut a, mut b) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-6 {
        if mean(c) < mean(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    per_gate(0.5 * (a + b)).map(|v| v.max(0.0))
}

/// Systematic infidelity per gate on the true device.
pub fn systematic_infidelity_pair(
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    experiment: &ExperimentModel,
) -> [f64; 2] {
    pair_infidelity(&experiment.gate(pulse_x), &experiment.gate(pulse_y), pulse_x.target(), pulse_y.target())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perfect() -> (Su2, Su2) {
        (GateTarget::x90().su2(), GateTarget::y90m().su2())
    }

    #[test]
    fn perfect_gates_give_zero() {
        let (x, y) = perfect();
        assert!(sequence_outcomes(&x, &y).iter().all(|s| s.abs() < 1e-12));
        let p = pair_infidelity(&x, &y, &GateTarget::x90(), &GateTarget::y90m());
        assert!(p[0] < 1e-12 && p[1] < 1e-12);
    }

    #[test]
    fn over_rotation_example() {
        let (_, y) = perfect();
        let x = Su2::rotation(FRAC_PI_2 + 0.1, [1.0, 0.0, 0.0]);
        let s = sequence_outcomes(&x, &y);
        assert!((s[0] + 0.1f64.sin()).abs() < 1e-12);
        let p = pair_infidelity(&x, &y, &GateTarget::x90(), &GateTarget::y90m());
        let want = 2.0 / 3.0 * (0.05f64).sin().powi(2);
        assert!((p[0] - want).abs() < 1e-12, "{} vs {want}", p[0]);
        // small-angle form α²/6
        assert!((want - 0.01 / 6.0).abs() < 1e-3 * want);
        assert!(p[1] < 1e-12);
    }

    #[test]
    fn joint_z_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = GateErrorParams { phi: 0.02, chi: -0.01, n_y: 0.03, n_z: -0.02, v_x: 0.01, v_z: 0.04 };
        let (x, y) = e.gates();
        let s0 = sequence_outcomes(&x, &y);
        let p0 = pair_infidelity(&x, &y, &GateTarget::x90(), &GateTarget::y90m());
        for _ in 0..10 {
            let g: f64 = rng.random_range(0.0..TAU);
            let rz = Su2::rotation(g, [0.0, 0.0, 1.0]);
            let (xr, yr) = (rz * x * rz.adjoint(), rz * y * rz.adjoint());
            let s = sequence_outcomes(&xr, &yr);
            for (a, b) in s.iter().zip(&s0) {
                assert!((a - b).abs() < 1e-12);
            }
            let p = pair_infidelity(&xr, &yr, &GateTarget::x90(), &GateTarget::y90m());
            // γ is refined to 1e-6; the mean is stationary there, the per-gate terms are not
            assert!(((p[0] + p[1]) - (p0[0] + p0[1])).abs() < 1e-12, "{p:?} vs {p0:?}");
            assert!((p[0] - p0[0]).abs() < 1e-8 && (p[1] - p0[1]).abs() < 1e-8, "{p:?} vs {p0:?}");
        }
    }

    #[test]
    fn params_round_trip_through_gates() {
        let e = GateErrorParams { phi: 0.01, chi: -0.02, n_y: 0.015, n_z: -0.01, v_x: 0.005, v_z: 0.02 };
        let (x, y) = e.gates();
        let back = GateErrorParams::from_gates(&x, &y);
        for (a, b) in back.to_array().iter().zip(&e.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_inverts_linear_map_on_identifiable_part() {
        assert_eq!(fit_error_params(&[0.0; 6]), GateErrorParams::default());
        let e = GateErrorParams { phi: 0.01, chi: -0.02, n_y: 0.015, n_z: -0.01, v_x: 0.005, v_z: 0.02 };
        let f = fit_error_params(&e.linear_outcomes());
        assert!((f.phi - e.phi).abs() < 1e-15 && (f.chi - e.chi).abs() < 1e-15);
        assert!((f.n_z - e.n_z).abs() < 1e-15 && (f.v_z - e.v_z).abs() < 1e-15);
        assert!((f.n_y + f.v_x - e.n_y - e.v_x).abs() < 1e-15);
        assert_eq!(f.linear_outcomes().map(|v| (v * 1e12).round()), e.linear_outcomes().map(|v| (v * 1e12).round()));
    }

    #[test]
    fn fit_recovers_single_axis_error() {
        let e = GateErrorParams { n_z: 0.05, ..Default::default() };
        let (x, y) = e.gates();
        let f = fit_error_params(&sequence_outcomes(&x, &y));
        assert!((f.n_z - 0.05).abs() < 2.5e-3, "{}", f.n_z);
    }

    #[test]
    fn linear_model_holds_for_small_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let mut p: [f64; 6] = std::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p.iter_mut().for_each(|v| *v *= 0.02 / norm);
            let e = GateErrorParams::from_array(p);
            let (x, y) = e.gates();
            let exact = sequence_outcomes(&x, &y);
            let lin = e.linear_outcomes();
            let diff = exact.iter().zip(&lin).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = lin.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(diff < 0.1 * scale, "{diff} vs {scale}");
        }
    }

    #[test]
    fn shot_noise_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in [0.0, 0.3, -0.7] {
            let draws: Vec<f64> = (0..1000).map(|_| sample_outcome(s, 10_000, &mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / 1000.0;
            let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
            let want = (1.0 - s * s) / 10_000.0;
            assert!((var - want).abs() < 0.1 * want, "s={s}: {var} vs {want}");
        }
    }
}
