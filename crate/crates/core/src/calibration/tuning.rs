// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-loop tuning: LM on measured bootstrap outcomes plus modelled noise.

use std::cell::{Cell, RefCell};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PulseSequence;
use crate::noise::{GateEvaluator, NoiseModel};
use crate::optim::{LmConfig, LmSolver, StepOutcome, Termination};
use crate::rng::substream;

use super::{bootstrap_outcomes, systematic_infidelity_pair, ExperimentModel};

/// Weights of the modelled noise infidelities in the tuning residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseWeights {
    pub w_x: f64,
    pub w_y: f64,
}

impl Default for NoiseWeights {
    fn default() -> Self {
        NoiseWeights { w_x: 1.0, w_y: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub max_iter: usize,
    /// Success when both gates' systematic infidelity falls below this.
    pub threshold: f64,
    pub weights: NoiseWeights,
    /// Use exact outcomes instead of shot-noise estimates.
    pub exact: bool,
    /// Damped trial steps per iteration.
    pub max_trials: usize,
    pub lm: LmConfig,
    /// Noise model for the modelled infidelities.
    pub noise: NoiseModel,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            max_iter: 25,
            threshold: 1e-3,
            weights: NoiseWeights::default(),
            exact: false,
            max_trials: 10,
            lm: LmConfig { lambda0: 0.03, fd_step: 20.0, ..LmConfig::default() },
            noise: NoiseModel::default(),
        }
    }
}

/// One loop iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub iter: usize,
    #[serde(rename = "S")]
    pub s: [f64; 6],
    #[serde(rename = "I_sys")]
    pub i_sys: [f64; 2],
    #[serde(rename = "I_n")]
    pub i_n: [f64; 2],
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct CalibrationState {
    pub pulse_x: PulseSequence,
    pub pulse_y: PulseSequence,
    /// Outcomes measured at the final pulses.
    pub s_measured: [f64; 6],
    pub iteration: usize,
    pub history: Vec<CalibrationRecord>,
    pub converged: bool,
}

impl CalibrationState {
    pub fn final_record(&self) -> &CalibrationRecord {
        self.history.last().expect("history starts with iteration 0")
    }
}

/// Tuning residual `[S_1..S_6, w_x I_n(x), w_y I_n(y)]`.
///
/// `S` is measured on the experiment; `I_n` is the noise-only infidelity of
/// each gate under the nominal model the pulses were designed with.
#[allow(clippy::too_many_arguments)]
pub fn residuals_eq3(
    eps_x: &[f64],
    eps_y: &[f64],
    nominal: (&PulseSequence, &PulseSequence),
    experiment: &ExperimentModel,
    weights: &NoiseWeights,
    noise: &NoiseModel,
    exact: bool,
    rng: &mut impl Rng,
) -> Result<[f64; 8]> {
    let px = nominal.0.with_eps(eps_x.to_vec())?;
    let py = nominal.1.with_eps(eps_y.to_vec())?;
    let s = bootstrap_outcomes(&px, &py, experiment, exact, rng);
    let ev = GateEvaluator::new(*noise);
    let inx = ev.breakdown(&px).0.total();
    let iny = ev.breakdown(&py).0.total();
    Ok([s[0], s[1], s[2], s[3], s[4], s[5], weights.w_x * inx, weights.w_y * iny])
}

/// Modelled noise infidelity with a one-entry cache; most Jacobian columns
/// leave one of the two gates untouched.
struct NoiseCache<'a> {
    evaluator: &'a GateEvaluator,
    last: RefCell<Option<(Vec<f64>, f64)>>,
}

impl<'a> NoiseCache<'a> {
    fn new(evaluator: &'a GateEvaluator) -> Self {
        NoiseCache { evaluator, last: RefCell::new(None) }
    }

    fn get(&self, pulse: &PulseSequence) -> f64 {
        if let Some((eps, v)) = self.last.borrow().as_ref() {
            if eps.as_slice() == pulse.eps() {
                return *v;
            }
        }
        let v = self.evaluator.breakdown(pulse).0.total();
        *self.last.borrow_mut() = Some((pulse.eps().to_vec(), v));
        v
    }
}

/// Reusable tuning loop for one pair of time grids.
#[derive(Debug, Clone)]
pub struct Calibrator {
    cfg: CalibrationConfig,
    eval_x: GateEvaluator,
    eval_y: GateEvaluator,
}

impl Calibrator {
    pub fn new(template_x: &PulseSequence, template_y: &PulseSequence, cfg: CalibrationConfig) -> Result<Self> {
        cfg.lm.validate()?;
        cfg.noise.validate()?;
        if template_x.device() != template_y.device() {
            return Err(Error::InvalidParameter("both gates must share one nominal device".into()));
        }
        Ok(Calibrator {
            cfg,
            eval_x: GateEvaluator::for_grid(cfg.noise, template_x),
            eval_y: GateEvaluator::for_grid(cfg.noise, template_y),
        })
    }

    pub fn config(&self) -> &CalibrationConfig {
        &self.cfg
    }

    /// Noise-only infidelity of each gate under the nominal model.
    pub fn noise_infidelity(&self, pulse_x: &PulseSequence, pulse_y: &PulseSequence) -> [f64; 2] {
        [self.eval_x.breakdown(pulse_x).0.total(), self.eval_y.breakdown(pulse_y).0.total()]
    }

    /// Tunes the pair on the experiment until both systematic infidelities
    /// drop below the threshold or the iteration budget runs out.
    ///
    /// Every residual evaluation, Jacobian columns included, draws fresh shots
    /// from its own substream of `experiment.seed`. After each iteration the
    /// outcomes at the current pulses are re-measured.
    pub fn run(
        &self,
        pulse_x: &PulseSequence,
        pulse_y: &PulseSequence,
        experiment: &ExperimentModel,
    ) -> Result<CalibrationState> {
        experiment.validate()?;
        let cfg = &self.cfg;
        let nx = pulse_x.n_seg();
        let device = *pulse_x.device();
        let bounds = vec![(device.eps_min, device.eps_max); nx + pulse_y.n_seg()];
        let cache_x = NoiseCache::new(&self.eval_x);
        let cache_y = NoiseCache::new(&self.eval_y);
        let draws = Cell::new(0u64);
        let build = |z: &[f64]| -> Result<(PulseSequence, PulseSequence)> {
            Ok((pulse_x.with_eps(z[..nx].to_vec())?, pulse_y.with_eps(z[nx..].to_vec())?))
        };
        let f = |z: &[f64]| -> Result<Vec<f64>> {
            let (px, py) = build(z)?;
            let mut rng = substream(experiment.seed, draws.get());
            draws.set(draws.get() + 1);
            let s = bootstrap_outcomes(&px, &py, experiment, cfg.exact, &mut rng);
            let mut r = s.to_vec();
            r.push(cfg.weights.w_x * cache_x.get(&px));
            r.push(cfg.weights.w_y * cache_y.get(&py));
            Ok(r)
        };
        let lm = LmConfig { max_iter: usize::MAX, ..cfg.lm };
        let z0: Vec<f64> = pulse_x.eps().iter().chain(pulse_y.eps()).cloned().collect();
        let mut solver = LmSolver::new(f, &z0, Some(&bounds), lm)?.with_max_trials(cfg.max_trials);

        let record = |x: &[f64], r: &[f64], iter: usize, accepted: bool| -> Result<CalibrationRecord> {
            let (px, py) = build(x)?;
            Ok(CalibrationRecord {
                iter,
                s: [r[0], r[1], r[2], r[3], r[4], r[5]],
                i_sys: systematic_infidelity_pair(&px, &py, experiment),
                i_n: [cache_x.get(&px), cache_y.get(&py)],
                accepted,
            })
        };
        let done = |rec: &CalibrationRecord| rec.i_sys.iter().all(|v| *v < cfg.threshold);

        let mut history = vec![record(solver.x(), solver.residual(), 0, true)?];
        let mut converged = done(&history[0]);
        let mut iteration = 0;
        while !converged && iteration < cfg.max_iter {
            iteration += 1;
            solver.reset_damping();
            let accepted = !matches!(solver.step()?, StepOutcome::Done(Termination::Stalled));
            solver.refresh()?;
            let rec = record(solver.x(), solver.residual(), iteration, accepted)?;
            converged = done(&rec);
            history.push(rec);
        }
        let x = solver.x().to_vec();
        drop(solver);
        let (pulse_x, pulse_y) = build(&x)?;
        let s_measured = history.last().expect("non-empty").s;
        Ok(CalibrationState { pulse_x, pulse_y, s_measured, iteration, history, converged })
    }
}

/// One-shot form of [`Calibrator::run`].
pub fn calibrate_loop(
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    experiment: &ExperimentModel,
    cfg: &CalibrationConfig,
) -> Result<CalibrationState> {
    Calibrator::new(pulse_x, pulse_y, *cfg)?.run(pulse_x, pulse_y, experiment)
}
