// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Noise models and infidelity channels.
//!
//! Three channels are tracked separately: quasistatic Overhauser-gradient
//! noise, quasistatic detuning noise (everything below `f_low`), and fast
//! detuning noise between `f_low` and `f_high` evaluated to first order with
//! filter functions.

mod montecarlo;
mod quasistatic;
mod report;
mod spectral;
mod trace;

pub use montecarlo::{mc_fast_noise_oracle, McEstimate};
pub use quasistatic::{
    quasistatic_infidelity_dbz, quasistatic_infidelity_eps, GaussHermite,
};
pub use report::{evaluate_gate, GateEvaluator, GateReport};
pub use spectral::{
    fast_noise_infidelity, filter_function, log_grid, FastNoiseKernel, FilterFunctionTable,
    SpectralQuadrature, ToggledCoefficients,
};
pub use trace::generate_noise_trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|g*| μ_B / ħ` for GaAs (g* = −0.44), in rad/ns per mT.
pub const RAD_PER_NS_PER_MT: f64 = 0.038_694_3;
/// V²/Hz → µV²/Hz.
pub const V2_TO_UV2: f64 = 1e12;

/// Quasistatic widths and the detuning-noise power spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Quasistatic ΔBz standard deviation, rad/ns.
    pub sigma_dbz: f64,
    /// Quasistatic detuning standard deviation, µV.
    pub sigma_eps: f64,
    /// One-sided S_ε at 1 Hz, V²/Hz.
    pub psd_amp: f64,
    pub psd_exponent: f64,
    /// Lower edge of the spectral band, Hz.
    pub f_low: f64,
    /// Start of the white extension, Hz.
    pub f_knee: f64,
    /// Upper cutoff, Hz.
    pub f_high: f64,
    /// Gauss–Hermite nodes for quasistatic averages.
    pub n_quad: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_dbz: 0.5 * RAD_PER_NS_PER_MT,
            sigma_eps: 8.0,
            psd_amp: 8e-16,
            psd_exponent: 0.7,
            f_low: 5e4,
            f_knee: 1e6,
            f_high: 3e9,
            n_quad: 7,
        }
    }
}

impl NoiseModel {
    /// No noise at all.
    pub fn silent() -> Self {
        NoiseModel { sigma_dbz: 0.0, sigma_eps: 0.0, psd_amp: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_dbz", self.sigma_dbz),
            ("sigma_eps", self.sigma_eps),
            ("psd_amp", self.psd_amp),
            ("psd_exponent", self.psd_exponent),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.f_low > 0.0 && self.f_low < self.f_knee && self.f_knee <= self.f_high)
            || !self.f_high.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "need 0 < f_low < f_knee <= f_high, got {} / {} / {}",
                self.f_low, self.f_knee, self.f_high
            )));
        }
        if self.n_quad == 0 {
            return Err(Error::InvalidParameter("n_quad must be at least 1".into()));
        }
        Ok(())
    }

    /// Same spectrum shape with every noise amplitude scaled by `k` (variances by `k²`).
    pub fn scaled(&self, k: f64) -> Self {
        NoiseModel {
            sigma_dbz: self.sigma_dbz * k,
            sigma_eps: self.sigma_eps * k,
            psd_amp: self.psd_amp * k * k,
            ..*self
        }
    }

    /// S_ε(f) in V²/Hz without band checks.
    #[inline]
    pub fn psd_unchecked(&self, f: f64) -> f64 {
        let f = f.min(self.f_knee);
        self.psd_amp * f.powf(-self.psd_exponent)
    }

    /// S_ε(f) in µV²/Hz without band checks.
    #[inline]
    pub fn psd_uv2(&self, f: f64) -> f64 {
        self.psd_unchecked(f) * V2_TO_UV2
    }

    pub fn has_spectrum(&self) -> bool {
        self.psd_amp > 0.0
    }
}

/// One-sided S_ε(f), V²/Hz: power law up to `f_knee`, white above.
pub fn psd_eval(f: f64, model: &NoiseModel) -> Result<f64> {
    if !(f >= model.f_low && f <= model.f_high) {
        return Err(Error::OutOfBand(f));
    }
    Ok(model.psd_unchecked(f))
}

/// Noise infidelity channels of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseBreakdown {
    pub dbz: f64,
    pub eps_slow: f64,
    pub eps_fast: f64,
}

impl NoiseBreakdown {
    pub fn total(&self) -> f64 {
        self.dbz + self.eps_slow + self.eps_fast
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_examples() {
        let m = NoiseModel::default();
        let at_knee = psd_eval(1e6, &m).unwrap();
        assert!((at_knee - 5.048e-20).abs() < 0.001e-20, "{at_knee}");
        let at_low = psd_eval(5e4, &m).unwrap();
        let want = 8e-16 * (5e4f64).powf(-0.7);
        assert!((at_low - want).abs() < 1e-12 * want, "{at_low}");
        assert!((at_low - 4.11e-19).abs() < 0.001e-19, "{at_low}");
        assert_eq!(psd_eval(1e9, &m).unwrap(), at_knee);
        assert!(matches!(psd_eval(1e4, &m), Err(Error::OutOfBand(_))));
        assert!(psd_eval(4e9, &m).is_err());
    }

    #[test]
    fn default_sigma_dbz_conversion() {
        let m = NoiseModel::default();
        assert!((m.sigma_dbz - 0.01935).abs() < 1e-5);
    }

    #[test]
    fn validation() {
        NoiseModel::default().validate().unwrap();
        let bad = NoiseModel { f_knee: 1e3, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = NoiseModel { sigma_eps: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn psd_is_non_increasing() {
        let m = NoiseModel::default();
        let grid = log_grid(m.f_low, m.f_high, 500);
        for w in grid.windows(2) {
            assert!(m.psd_unchecked(w[1]) <= m.psd_unchecked(w[0]));
        }
    }
}
