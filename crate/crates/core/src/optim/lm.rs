// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Levenberg–Marquardt least squares with box bounds.
//!
//! Bounded coordinates are optimized through `x = mid + half·sin(y)`, so every
//! iterate is feasible and the inner problem is unconstrained. Jacobians come
//! from forward differences taken in `x`, then chain-ruled into `y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmConfig {
    /// Jacobian evaluations.
    pub max_iter: usize,
    pub lambda0: f64,
    /// Damping factor applied on rejection; divided out on acceptance.
    pub nu: f64,
    /// Stop when `‖Jᵀr‖∞` falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step satisfies `‖δy‖ ≤ step_tol (‖y‖ + step_tol)`.
    pub step_tol: f64,
    /// Forward-difference step in `x` units.
    pub fd_step: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig { max_iter: 200, lambda0: 1e-3, nu: 3.0, grad_tol: 1e-16, step_tol: 1e-10, fd_step: 1.6 }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 1.0) {
            return Err(Error::InvalidParameter(format!("nu must exceed 1, got {}", self.nu)));
        }
        for (name, v) in [
            ("lambda0", self.lambda0),
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    Step,
    MaxIter,
    /// Damping grew without bound and no step was accepted.
    Stalled,
}

/// Result of one [`LmSolver::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Done(Termination),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    /// `½‖r‖²`.
    pub cost: f64,
    /// Cost at the start and after every accepted step.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const LAMBDA_MAX: f64 = 1e16;

fn half_norm_sqr(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn check_finite(r: &[f64]) -> Result<()> {
    match r.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("residual component {i}"))),
        None => Ok(()),
    }
}

/// Iterate-by-iterate driver; [`lm_minimize`] runs it to completion.
pub struct LmSolver<F> {
    f: F,
    bounds: Option<Vec<(f64, f64)>>,
    cfg: LmConfig,
    y: Vec<f64>,
    x: Vec<f64>,
    r: Vec<f64>,
    cost: f64,
    lambda: f64,
    max_trials: usize,
    history: Vec<f64>,
    iterations: usize,
    evaluations: usize,
}

impl<F> LmSolver<F>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    pub fn new(mut f: F, x0: &[f64], bounds: Option<&[(f64, f64)]>, cfg: LmConfig) -> Result<Self> {
        cfg.validate()?;
        if let Some(b) = bounds {
            if b.len() != x0.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} bounds for {} variables",
                    b.len(),
                    x0.len()
                )));
            }
            if let Some((lo, hi)) = b.iter().find(|(lo, hi)| !(lo < hi)) {
                return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
            }
        }
        let y: Vec<f64> = match bounds {
            Some(b) => x0
                .iter()
                .zip(b)
                .map(|(&x, &(lo, hi))| {
                    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    ((x - mid) / half).clamp(-1.0, 1.0).asin()
                })
                .collect(),
            None => x0.to_vec(),
        };
        let bounds = bounds.map(<[_]>::to_vec);
        let x = to_x(&y, bounds.as_deref());
        let r = f(&x)?;
        check_finite(&r)?;
        let cost = half_norm_sqr(&r);
        Ok(LmSolver {
            f,
            bounds,
            cfg,
            y,
            x,
            r,
            cost,
            lambda: cfg.lambda0,
            max_trials: usize::MAX,
            history: vec![cost],
            iterations: 0,
            evaluations: 1,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Caps the damped trial steps per [`step`](Self::step); exhausting them
    /// reports [`Termination::Stalled`].
    pub fn with_max_trials(mut self, n: usize) -> Self {
        self.max_trials = n.max(1);
        self
    }

    /// Resets the damping to `λ0`.
    pub fn reset_damping(&mut self) {
        self.lambda = self.cfg.lambda0;
    }

    /// Replaces the stored residual at the current iterate with a fresh
    /// evaluation, for objectives that are re-measured between steps.
    pub fn refresh(&mut self) -> Result<()> {
        let r = (self.f)(&self.x)?;
        check_finite(&r)?;
        self.evaluations += 1;
        self.cost = half_norm_sqr(&r);
        self.r = r;
        Ok(())
    }

    fn jacobian(&mut self) -> DMatrix<f64> {
        let (m, n) = (self.r.len(), self.x.len());
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut xp = self.x.clone();
        for i in 0..n {
            let mut h = self.cfg.fd_step;
            let mut dxdy = 1.0;
            if let Some(b) = &self.bounds {
                let (lo, hi) = b[i];
                if self.x[i] + h > hi {
                    h = -h;
                }
                if self.x[i] + h < lo {
                    h = 0.5 * (hi - lo).min(self.cfg.fd_step);
                }
                dxdy = 0.5 * (hi - lo) * self.y[i].cos();
            }
            xp[i] = self.x[i] + h;
            self.evaluations += 1;
            if let Ok(rp) = (self.f)(&xp) {
                if rp.len() == m && rp.iter().all(|v| v.is_finite()) {
                    for k in 0..m {
                        jac[(k, i)] = (rp[k] - self.r[k]) / h * dxdy;
                    }
                }
            }
            xp[i] = self.x[i];
        }
        jac
    }

    /// One Jacobian evaluation followed by damped trial steps until one lowers
    /// the cost.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if self.iterations >= self.cfg.max_iter {
            return Ok(StepOutcome::Done(Termination::MaxIter));
        }
        self.iterations += 1;
        let jac = self.jacobian();
        let r = DVector::from_column_slice(&self.r);
        let g = jac.transpose() * &r;
        if g.amax() <= self.cfg.grad_tol {
            return Ok(StepOutcome::Done(Termination::Gradient));
        }
        let jtj = jac.transpose() * &jac;
        let n = self.y.len();
        let mut trials = 0;
        while self.lambda < LAMBDA_MAX && trials < self.max_trials {
            trials += 1;
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += self.lambda;
            }
            let Some(chol) = a.cholesky() else {
                self.lambda *= self.cfg.nu;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let y_trial: Vec<f64> = self.y.iter().zip(delta.iter()).map(|(y, d)| y + d).collect();
            let x_trial = to_x(&y_trial, self.bounds.as_deref());
            self.evaluations += 1;
            let trial = (self.f)(&x_trial).ok().filter(|r| r.iter().all(|v| v.is_finite()));
            match trial {
                Some(r_trial) if half_norm_sqr(&r_trial) < self.cost => {
                    let y_norm = self.y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let small = delta.norm() <= self.cfg.step_tol * (y_norm + self.cfg.step_tol);
                    self.cost = half_norm_sqr(&r_trial);
                    self.r = r_trial;
                    self.y = y_trial;
                    self.x = x_trial;
                    self.history.push(self.cost);
                    self.lambda = (self.lambda / self.cfg.nu).max(1e-300);
                    return Ok(if small { StepOutcome::Done(Termination::Step) } else { StepOutcome::Accepted });
                }
                _ => self.lambda *= self.cfg.nu,
            }
        }
        Ok(StepOutcome::Done(Termination::Stalled))
    }

    pub fn finish(self, termination: Termination) -> LmOutcome {
        LmOutcome {
            x: self.x,
            residual: self.r,
            cost: self.cost,
            cost_history: self.history,
            iterations: self.iterations,
            evaluations: self.evaluations,
            termination,
        }
    }
}

fn to_x(y: &[f64], bounds: Option<&[(f64, f64)]>) -> Vec<f64> {
    match bounds {
        Some(b) => y
            .iter()
            .zip(b)
            .map(|(&y, &(lo, hi))| (0.5 * (lo + hi) + 0.5 * (hi - lo) * y.sin()).clamp(lo, hi))
            .collect(),
        None => y.to_vec(),
    }
}

/// Minimizes `½‖f(x)‖²`, optionally within box bounds.
pub fn lm_minimize<F>(f: F, x0: &[f64], bounds: Option<&[(f64, f64)]>, cfg: &LmConfig) -> Result<LmOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut solver = LmSolver::new(f, x0, bounds, *cfg)?;
    loop {
        if let StepOutcome::Done(t) = solver.step()? {
            return Ok(solver.finish(t));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(fd_step: f64) -> LmConfig {
        LmConfig { fd_step, max_iter: 500, grad_tol: 1e-20, step_tol: 1e-14, ..LmConfig::default() }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let out = lm_minimize(f, &[-1.2, 1.0], None, &cfg(1e-7)).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8, "{:?}", out.x);
        assert!(out.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn linear_least_squares_matches_normal_equations() {
        let a = DMatrix::from_row_slice(5, 3, &[
            1.0, 2.0, 0.5, //
            -1.0, 0.3, 2.0, //
            0.7, -1.1, 1.0, //
            2.0, 0.0, -0.4, //
            0.1, 1.5, 0.9,
        ]);
        let b = DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0, 0.25]);
        let want = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &b));
        let f = |x: &[f64]| Ok((&a * DVector::from_column_slice(x) - &b).iter().cloned().collect());
        let out = lm_minimize(f, &[0.0; 3], None, &cfg(1e-3)).unwrap();
        for i in 0..3 {
            assert!((out.x[i] - want[i]).abs() < 1e-10, "{} vs {}", out.x[i], want[i]);
        }
    }

    #[test]
    fn bounded_quadratic_lands_on_boundary() {
        let f = |x: &[f64]| Ok(vec![x[0] - 3.0, x[1] + 0.5]);
        let bounds = [(-1.0, 1.0), (-2.0, 2.0)];
        let out = lm_minimize(f, &[0.2, 0.1], Some(&bounds), &cfg(1e-7)).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8, "{:?}", out.x);
        assert!((out.x[1] + 0.5).abs() < 1e-8, "{out:?}");
        assert!(out.x.iter().zip(&bounds).all(|(x, (lo, hi))| x >= lo && x <= hi));
    }

    #[test]
    fn rejects_non_finite_start() {
        let f = |_: &[f64]| Ok(vec![f64::NAN]);
        assert!(matches!(lm_minimize(f, &[0.0], None, &cfg(1e-6)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_bad_config() {
        let f = |x: &[f64]| Ok(vec![x[0]]);
        let bad = LmConfig { nu: 1.0, ..LmConfig::default() };
        assert!(lm_minimize(f, &[0.0], None, &bad).is_err());
    }
}
