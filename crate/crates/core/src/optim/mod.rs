// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Gate synthesis: the vector objective, multi-start Levenberg–Marquardt,
//! grid scans and robustness checks.

mod lm;
mod robustness;
mod scan;

pub use lm::{lm_minimize, LmConfig, LmOutcome, LmSolver, StepOutcome, Termination};
pub use robustness::{
    filter_peak, robustness_scan, sensitivities, FilterPeak, Perturbation, RobustnessReport,
    Sensitivity,
};
pub use scan::{scan_grid, ScanCell};

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceModel, GateTarget, PulseSequence};
use crate::noise::{GateEvaluator, GateReport, NoiseModel};
use crate::rng::substream;
use crate::unitary::Rotation;

/// `[I_dbz, I_eps_slow, I_eps_fast, (φn − φ_t n_t)_{x,y,z}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq1Residual {
    pub i_dbz: f64,
    pub i_eps_slow: f64,
    pub i_eps_fast: f64,
    pub mismatch: [f64; 3],
}

impl Eq1Residual {
    /// Residual vector; with `sqrt_mode` the infidelities enter as `√I`.
    pub fn to_vec(&self, sqrt_mode: bool) -> Vec<f64> {
        let t = |v: f64| if sqrt_mode { v.max(0.0).sqrt() } else { v };
        vec![
            t(self.i_dbz),
            t(self.i_eps_slow),
            t(self.i_eps_fast),
            self.mismatch[0],
            self.mismatch[1],
            self.mismatch[2],
        ]
    }

    pub fn mismatch_norm(&self) -> f64 {
        self.mismatch.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `φn − φ_t n_t`, using whichever of `(φ, n)` and `(2π − φ, −n)` lies closer
/// to the target.
pub fn rotation_mismatch(rot: &Rotation, target: &GateTarget) -> [f64; 3] {
    let t = target.vector();
    let diff = |v: [f64; 3]| [v[0] - t[0], v[1] - t[1], v[2] - t[2]];
    let a = diff(rot.vector());
    let b = diff(rot.complement().vector());
    let n2 = |d: &[f64; 3]| d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if n2(&b) < n2(&a) {
        b
    } else {
        a
    }
}

/// One synthesis problem: device, noise, target and clocking.
#[derive(Debug, Clone)]
pub struct GateProblem {
    pub device: DeviceModel,
    pub noise: NoiseModel,
    pub target: GateTarget,
    pub n_dbz: u32,
    pub sqrt_mode: bool,
    template: PulseSequence,
    evaluator: GateEvaluator,
}

impl GateProblem {
    pub fn new(
        device: DeviceModel,
        noise: NoiseModel,
        target: GateTarget,
        n_seg: usize,
        n_dbz: u32,
    ) -> Result<Self> {
        noise.validate()?;
        if n_seg == 0 {
            return Err(Error::InvalidParameter("n_seg must be at least 1".into()));
        }
        let template = PulseSequence::new(vec![device.eps_min; n_seg], n_dbz, target, device)?;
        let evaluator = GateEvaluator::for_grid(noise, &template);
        Ok(GateProblem { device, noise, target, n_dbz, sqrt_mode: false, template, evaluator })
    }

    pub fn with_sqrt_mode(mut self, on: bool) -> Self {
        self.sqrt_mode = on;
        self
    }

    pub fn n_seg(&self) -> usize {
        self.template.n_seg()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.device.eps_min, self.device.eps_max); self.n_seg()]
    }

    pub fn pulse(&self, eps: &[f64]) -> Result<PulseSequence> {
        self.template.with_eps(eps.to_vec())
    }

    pub fn evaluator(&self) -> &GateEvaluator {
        &self.evaluator
    }

    pub fn report(&self, pulse: &PulseSequence) -> GateReport {
        self.evaluator.report(pulse)
    }

    pub fn residual(&self, eps: &[f64]) -> Result<Eq1Residual> {
        let pulse = self.pulse(eps)?;
        let (noise, rot, _) = self.evaluator.breakdown(&pulse);
        Ok(Eq1Residual {
            i_dbz: noise.dbz,
            i_eps_slow: noise.eps_slow,
            i_eps_fast: noise.eps_fast,
            mismatch: rotation_mismatch(&rot, &self.target),
        })
    }

    /// Uniform random samples within the bounds.
    pub fn random_start(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.n_seg()).map(|_| rng.random_range(self.device.eps_min..=self.device.eps_max)).collect()
    }
}

/// Eq. 1 residual for samples `eps` under `problem`.
pub fn residuals_eq1(eps: &[f64], problem: &GateProblem) -> Result<Eq1Residual> {
    problem.residual(eps)
}

/// Best restart of a multi-start run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: PulseSequence,
    pub report: GateReport,
    pub restarts: usize,
    pub best_restart: usize,
    /// Final `½‖r‖²` of every restart, by index.
    pub restart_costs: Vec<f64>,
    pub cost_history_best: Vec<f64>,
    pub termination: Termination,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Independent LM runs from uniform random starts; the lowest final cost wins,
/// ties going to the lower restart index.
pub fn multistart_optimize(
    problem: &GateProblem,
    n_restarts: usize,
    seed: u64,
    cfg: &LmConfig,
) -> Result<OptimizationResult> {
    if n_restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let start = Instant::now();
    let bounds = problem.bounds();
    let runs: Vec<Result<LmOutcome>> = (0..n_restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = problem.random_start(&mut substream(seed, i as u64));
            let f = |x: &[f64]| Ok(problem.residual(x)?.to_vec(problem.sqrt_mode));
            lm_minimize(f, &x0, Some(&bounds), cfg)
        })
        .collect();
    let mut costs = Vec::with_capacity(n_restarts);
    let mut best: Option<(usize, LmOutcome)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        costs.push(run.cost);
        if best.as_ref().is_none_or(|(_, b)| run.cost < b.cost) {
            best = Some((i, run));
        }
    }
    let (best_restart, out) = best.expect("at least one restart");
    let pulse = problem.pulse(&out.x)?;
    let report = problem.report(&pulse);
    Ok(OptimizationResult {
        pulse,
        report,
        restarts: n_restarts,
        best_restart,
        restart_costs: costs,
        cost_history_best: out.cost_history,
        termination: out.termination,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn mismatch_picks_closer_representation() {
        let t = GateTarget::x90();
        let r = Rotation { angle: PI / 2.0, axis: [1.0, 0.0, 0.0], degenerate: false };
        assert_eq!(rotation_mismatch(&r, &t), [0.0, 0.0, 0.0]);
        let far = Rotation { angle: 1.5 * PI, axis: [-1.0, 0.0, 0.0], degenerate: false };
        let m = rotation_mismatch(&far, &t);
        assert!(m.iter().all(|v| v.abs() < 1e-15), "{m:?}");
    }

    #[test]
    fn exact_gate_without_noise_has_zero_residual() {
        let d = DeviceModel::default();
        let eps: Vec<f64> = (0..8).map(|k| -500.0 + 90.0 * k as f64).collect();
        let p = PulseSequence::new(eps.clone(), 1, GateTarget::x90(), d).unwrap();
        let target = GateTarget::from_rotation(&p.propagate().decompose());
        let problem = GateProblem::new(d, NoiseModel::silent(), target, 8, 1).unwrap();
        let r = problem.residual(&eps).unwrap().to_vec(false);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn infeasible_clock_propagates() {
        let d = DeviceModel { eps_min: 500.0, eps_max: 900.0, ..DeviceModel::default() };
        let err = GateProblem::new(d, NoiseModel::default(), GateTarget::x90(), 18, 1).unwrap_err();
        assert!(matches!(err, Error::InfeasibleClock { .. } | Error::Constraint(_)), "{err}");
    }

    #[test]
    fn residual_is_smooth_in_each_sample() {
        let d = DeviceModel::default();
        let problem = GateProblem::new(d, NoiseModel::default(), GateTarget::x90(), 18, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = problem.random_start(&mut rng);
        let col = |j: usize, h: f64| -> Vec<f64> {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = problem.residual(&xp).unwrap().to_vec(false);
            let rm = problem.residual(&xm).unwrap().to_vec(false);
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        for j in [0, 7, 17] {
            let (a, b) = (col(j, 0.1), col(j, 0.05));
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-6 * scale, "sample {j}: {u} vs {v}");
            }
            // forward difference at one microvolt stays within its O(h) truncation error
            let base = problem.residual(&x).unwrap().to_vec(false);
            let mut xp = x.clone();
            xp[j] += 1.0;
            let fwd: Vec<f64> =
                problem.residual(&xp).unwrap().to_vec(false).iter().zip(&base).map(|(p, q)| p - q).collect();
            for (u, v) in fwd.iter().zip(&a) {
                assert!((u - v).abs() <= 2e-2 * scale, "sample {j}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn single_restart_is_reproducible() {
        let problem =
            GateProblem::new(DeviceModel::default(), NoiseModel::default(), GateTarget::x90(), 6, 1).unwrap();
        let cfg = LmConfig { max_iter: 15, ..LmConfig::default() };
        let a = multistart_optimize(&problem, 1, 9, &cfg).unwrap();
        let b = multistart_optimize(&problem, 1, 9, &cfg).unwrap();
        assert_eq!(a.pulse.eps(), b.pulse.eps());
        assert_eq!(a.cost_history_best, b.cost_history_best);
        assert!(a.cost_history_best.windows(2).all(|w| w[1] <= w[0]));
        let (lo, hi) = (problem.device.eps_min, problem.device.eps_max);
        assert!(a.pulse.eps().iter().all(|e| (lo..=hi).contains(e)));
    }
}
