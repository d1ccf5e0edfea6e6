// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Full infidelity breakdown of one gate.

use crate::fidelity::su2_fidelity;
use crate::model::{ExchangeTrace, PulseSequence};
use crate::unitary::{Rotation, Su2, Unitary2};

use super::quasistatic::{dbz_channel, eps_channel, GaussHermite};
use super::spectral::{adaptive_infidelity, FastNoiseKernel, ToggledCoefficients};
use super::{NoiseBreakdown, NoiseModel};

/// Realized gate and its infidelity channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateReport {
    pub u_realized: Unitary2,
    pub rotation: Rotation,
    pub noise: NoiseBreakdown,
    /// `1 − F(U_noise_free, U_target)`.
    pub inf_systematic: f64,
}

impl GateReport {
    pub fn inf_total(&self) -> f64 {
        self.noise.total() + self.inf_systematic
    }
}

/// Evaluates pulses against one noise model, reusing the fast-noise kernel
/// across pulses that share a time grid.
#[derive(Debug, Clone)]
pub struct GateEvaluator {
    model: NoiseModel,
    rule: GaussHermite,
    kernel: Option<FastNoiseKernel>,
}

impl GateEvaluator {
    pub fn new(model: NoiseModel) -> Self {
        GateEvaluator { rule: GaussHermite::new(model.n_quad), model, kernel: None }
    }

    /// Prebuilds the kernel for the time grid of `template`.
    pub fn for_grid(model: NoiseModel, template: &PulseSequence) -> Self {
        let mut ev = Self::new(model);
        if model.has_spectrum() {
            ev.kernel = Some(FastNoiseKernel::for_pulse(template, &model));
        }
        ev
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Noise channels and the noise-free rotation.
    pub fn breakdown(&self, pulse: &PulseSequence) -> (NoiseBreakdown, Rotation, Unitary2) {
        let (noise, u0) = self.breakdown_trace(&pulse.exchange_trace(), pulse.dbz(), pulse.device().eps0);
        let u = u0.to_unitary();
        (noise, u.decompose(), u)
    }

    /// Noise channels of an explicit exchange trace, plus its noise-free propagator.
    pub fn breakdown_trace(&self, trace: &ExchangeTrace, dbz: f64, eps0: f64) -> (NoiseBreakdown, Su2) {
        let (coeffs, u0) = ToggledCoefficients::new(trace, dbz, eps0);
        let eps_fast = match &self.kernel {
            _ if !self.model.has_spectrum() => 0.0,
            Some(k) if k.matches(&coeffs) => k.infidelity(&coeffs).max(0.0),
            _ => adaptive_infidelity(&coeffs, &self.model),
        };
        let noise = NoiseBreakdown {
            dbz: dbz_channel(trace, dbz, &u0, self.model.sigma_dbz, &self.rule),
            eps_slow: eps_channel(trace, dbz, &u0, self.model.sigma_eps, eps0, &self.rule),
            eps_fast,
        };
        (noise, u0)
    }

    pub fn report(&self, pulse: &PulseSequence) -> GateReport {
        let (noise, rotation, u_realized) = self.breakdown(pulse);
        let inf_systematic = (1.0 - su2_fidelity(&u_realized.to_su2(), &pulse.target().su2())).max(0.0);
        GateReport { u_realized, rotation, noise, inf_systematic }
    }
}

/// Infidelity breakdown with the fast-noise integral refined adaptively.
pub fn evaluate_gate(pulse: &PulseSequence, model: &NoiseModel) -> GateReport {
    GateEvaluator::new(*model).report(pulse)
}
