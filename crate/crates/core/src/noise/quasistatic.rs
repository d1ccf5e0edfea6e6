// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};

use crate::fidelity::su2_fidelity;
use crate::model::{ExchangeTrace, PulseSequence};
use crate::unitary::Su2;

use super::NoiseModel;

/// Gauss–Hermite rule for expectations over a standard normal variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    /// Nodes in units of the standard deviation.
    pub nodes: Vec<f64>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: eigen-decomposition of the Hermite Jacobi matrix.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite needs at least one node");
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            // probabilists' Hermite recurrence: off-diagonal sqrt(k)
            let b = (k as f64).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights = pairs.iter().map(|p| p.1 / total).collect();
        // symmetric rule: pin the centre node of odd rules to exactly zero
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussHermite { nodes, weights }
    }

    /// `E[f(σ X)]` for `X ~ N(0, 1)`.
    pub fn expect(&self, sigma: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(sigma * x)).sum()
    }
}

/// Average infidelity over a quasistatic ΔBz offset, relative to the noise-free gate.
pub(crate) fn dbz_channel(
    trace: &ExchangeTrace,
    dbz: f64,
    reference: &Su2,
    sigma: f64,
    rule: &GaussHermite,
) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let f = rule.expect(sigma, |d| {
        if d == 0.0 {
            1.0
        } else {
            su2_fidelity(&trace.propagate(dbz + d), reference)
        }
    });
    (1.0 - f).max(0.0)
}

/// Average infidelity over a common detuning offset, applied exactly as
/// `J → J·exp(δ/ε0)`, relative to the noise-free gate.
pub(crate) fn eps_channel(
    trace: &ExchangeTrace,
    dbz: f64,
    reference: &Su2,
    sigma: f64,
    eps0: f64,
    rule: &GaussHermite,
) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let f = rule.expect(sigma, |d| {
        if d == 0.0 {
            1.0
        } else {
            let s = (d / eps0).exp();
            su2_fidelity(&trace.propagate_scaled(dbz, |_| s), reference)
        }
    });
    (1.0 - f).max(0.0)
}

/// Infidelity from quasistatic Overhauser-gradient noise.
pub fn quasistatic_infidelity_dbz(pulse: &PulseSequence, model: &NoiseModel) -> f64 {
    let trace = pulse.exchange_trace();
    let reference = trace.propagate(pulse.dbz());
    dbz_channel(&trace, pulse.dbz(), &reference, model.sigma_dbz, &GaussHermite::new(model.n_quad))
}

/// Infidelity from quasistatic detuning noise.
pub fn quasistatic_infidelity_eps(pulse: &PulseSequence, model: &NoiseModel) -> f64 {
    let trace = pulse.exchange_trace();
    let reference = trace.propagate(pulse.dbz());
    eps_channel(
        &trace,
        pulse.dbz(),
        &reference,
        model.sigma_eps,
        pulse.device().eps0,
        &GaussHermite::new(model.n_quad),
    )
}
