// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Model-error robustness and first-order sensitivity of synthesized gates.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{clocked_dbz, DeviceModel, PulseSequence};
use crate::noise::{filter_function, log_grid, GateEvaluator, NoiseBreakdown, NoiseModel};
use crate::unitary::Su2;

/// Multiplicative model errors applied to the physical device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub j0: f64,
    pub eps0: f64,
    pub tau_rise: f64,
}

impl Perturbation {
    pub const NONE: Perturbation = Perturbation { j0: 1.0, eps0: 1.0, tau_rise: 1.0 };

    pub fn apply(&self, d: &DeviceModel) -> DeviceModel {
        DeviceModel { j0: d.j0 * self.j0, eps0: d.eps0 * self.eps0, tau_rise: d.tau_rise * self.tau_rise, ..*d }
    }

    /// The 2³ corners `(1 ± m)` plus each single-parameter `1 ± m` change.
    pub fn standard_set(m: f64) -> Vec<Perturbation> {
        let mut out = Vec::with_capacity(14);
        for bits in 0..8u32 {
            let s = |b: u32| if bits & (1 << b) != 0 { 1.0 + m } else { 1.0 - m };
            out.push(Perturbation { j0: s(0), eps0: s(1), tau_rise: s(2) });
        }
        for sign in [1.0, -1.0] {
            let f = 1.0 + sign * m;
            out.push(Perturbation { j0: f, ..Self::NONE });
            out.push(Perturbation { eps0: f, ..Self::NONE });
            out.push(Perturbation { tau_rise: f, ..Self::NONE });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// Noise-only infidelity under the nominal model.
    pub nominal: f64,
    /// Largest noise-only infidelity over nominal and perturbed models.
    pub worst: f64,
    pub worst_case: Perturbation,
    pub cases: Vec<(Perturbation, NoiseBreakdown)>,
}

/// Noise-only infidelity of `pulse` when the physical device deviates from the
/// one it was designed for.
///
/// The AWG program and its timing stay fixed; the perturbed device shapes the
/// rise filter and the transfer function, and ΔBz is re-clocked to the
/// perturbed `J(eps_min)`.
pub fn robustness_scan(
    pulse: &PulseSequence,
    noise: &NoiseModel,
    perturbations: &[Perturbation],
) -> Result<RobustnessReport> {
    let ev = GateEvaluator::for_grid(*noise, pulse);
    let eval = |p: &Perturbation| -> Result<NoiseBreakdown> {
        let dev = p.apply(pulse.device());
        dev.validate()?;
        let dbz = clocked_dbz(pulse.n_dbz(), pulse.total_time(), dev.j_min())?;
        Ok(ev.breakdown_trace(&pulse.exchange_trace_with(&dev), dbz, dev.eps0).0)
    };
    let nominal = eval(&Perturbation::NONE)?.total();
    let mut report =
        RobustnessReport { nominal, worst: nominal, worst_case: Perturbation::NONE, cases: Vec::new() };
    for p in perturbations {
        let b = eval(p)?;
        if b.total() > report.worst {
            report.worst = b.total();
            report.worst_case = *p;
        }
        report.cases.push((*p, b));
    }
    Ok(report)
}

/// Rotation vector `θ n` of an SU(2) element, `θ ∈ [0, π]`.
fn log_vector(q: Su2) -> [f64; 3] {
    let q = if q.w < 0.0 { Su2 { w: -q.w, x: -q.x, y: -q.y, z: -q.z } } else { q };
    let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
    if s < 1e-300 {
        return [0.0; 3];
    }
    let theta = 2.0 * s.atan2(q.w);
    [theta * q.x / s, theta * q.y / s, theta * q.z / s]
}

/// First-order sensitivities `‖∂v/∂δ‖` of the error rotation `v = log(U₀† U(δ))`
/// to a common detuning offset (rad/µV) and to a ΔBz offset (rad per rad/ns),
/// next to the same quantities for a single rectangle producing the target
/// angle: driven by J for the detuning (`φ_t/ε0`) and by ΔBz for the gradient
/// (`φ_t/ΔBz`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub eps: f64,
    pub dbz: f64,
    pub eps_rectangle: f64,
    pub dbz_rectangle: f64,
}

pub fn sensitivities(pulse: &PulseSequence) -> Sensitivity {
    let trace = pulse.exchange_trace();
    let dbz = pulse.dbz();
    let eps0 = pulse.device().eps0;
    let u0 = trace.propagate(dbz).adjoint();
    let central = |f: &dyn Fn(f64) -> Su2, h: f64| {
        let (p, m) = (log_vector(u0 * f(h)), log_vector(u0 * f(-h)));
        ((p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2) + (p[2] - m[2]).powi(2)).sqrt() / (2.0 * h)
    };
    let by_eps = |d: f64| {
        let s = (d / eps0).exp();
        trace.propagate_scaled(dbz, |_| s)
    };
    let by_dbz = |d: f64| trace.propagate(dbz + d);
    let angle = pulse.target().angle;
    Sensitivity {
        eps: central(&by_eps, 1e-2),
        dbz: central(&by_dbz, 1e-5),
        eps_rectangle: angle / eps0,
        dbz_rectangle: angle / dbz,
    }
}

/// Filter-function peak over `[1 MHz, 3 GHz]` and the value at 1 MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPeak {
    pub f_peak: f64,
    pub value_peak: f64,
    pub value_1mhz: f64,
}

pub fn filter_peak(pulse: &PulseSequence) -> FilterPeak {
    let grid = log_grid(1e6, 3e9, 800);
    let table = filter_function(pulse, &grid);
    let (f_peak, value_peak) = table.peak().expect("non-empty grid");
    FilterPeak { f_peak, value_peak, value_1mhz: table.values[0] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GateTarget;
    use std::f64::consts::PI;

    fn pulse() -> PulseSequence {
        let eps: Vec<f64> = (0..18).map(|k| -400.0 + 30.0 * (k % 5) as f64).collect();
        PulseSequence::new(eps, 2, GateTarget::x90(), DeviceModel::default()).unwrap()
    }

    #[test]
    fn standard_set_shape() {
        let set = Perturbation::standard_set(0.2);
        assert_eq!(set.len(), 14);
        assert!(set.iter().all(|p| [p.j0, p.eps0, p.tau_rise].iter().all(|f| (*f - 1.0).abs() <= 0.2 + 1e-15)));
    }

    #[test]
    fn empty_set_reports_nominal() {
        let p = pulse();
        let m = NoiseModel::default();
        let r = robustness_scan(&p, &m, &[]).unwrap();
        assert_eq!(r.worst, r.nominal);
        let direct = GateEvaluator::for_grid(m, &p).report(&p).noise.total();
        assert!((r.nominal - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn worst_case_grows_with_magnitude() {
        let p = pulse();
        let m = NoiseModel::default();
        let a = robustness_scan(&p, &m, &Perturbation::standard_set(0.1)).unwrap();
        let b = robustness_scan(&p, &m, &Perturbation::standard_set(0.2)).unwrap();
        assert!(a.worst >= a.nominal && b.worst >= a.worst);
    }

    #[test]
    fn rectangle_sensitivities_match_definition() {
        // a flat wait at eps_min is a near-pure ΔBz rotation of angle ΔBz·T
        let d = DeviceModel::default();
        let p = PulseSequence::new(vec![d.eps_min; 6], 1, GateTarget::x90(), d).unwrap();
        let s = sensitivities(&p);
        let t = p.total_time();
        // dv/dδ = T along x, up to the small J_min tilt
        assert!((s.dbz - t).abs() < 1e-2 * t, "{} vs {t}", s.dbz);
        assert!((s.eps_rectangle - PI / 2.0 / d.eps0).abs() < 1e-15);
    }

    #[test]
    fn log_vector_inverts_rotation() {
        let v = log_vector(Su2::rotation(0.8, [0.6, 0.0, 0.8]));
        assert!((v[0] - 0.48).abs() < 1e-14 && (v[2] - 0.64).abs() < 1e-14);
    }
}
