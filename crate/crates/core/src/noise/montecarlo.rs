// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Time-domain Monte Carlo check of the fast-noise channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::su2_fidelity;
use crate::model::{PulseSequence, GL3_NODES};
use crate::rng::substream;

use super::trace::{plan, synthesize};
use super::NoiseModel;

/// Mean and standard error of `1 − F` over noise traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_traces: usize,
}

/// Linear interpolation of a uniformly sampled trace.
#[inline]
fn sample_at(x: &[f64], dt: f64, t: f64) -> f64 {
    let u = t / dt;
    let i = (u.floor() as usize).min(x.len() - 2);
    let frac = u - i as f64;
    x[i] * (1.0 - frac) + x[i + 1] * frac
}

/// Propagates the pulse under `n_traces` independent δε(t) realisations and
/// averages `1 − F` against the target.
///
/// Each trace spans at least `1/f_low` so the lowest spectral bin sits at or
/// below `f_low`; the gate sees its first gate-length window. The trace step is
/// half the smallest sub-step (capped by the band), and δε enters every
/// sub-step at its three quadrature nodes through `J → J·exp(δε/ε0)`.
pub fn mc_fast_noise_oracle(
    pulse: &PulseSequence,
    model: &NoiseModel,
    n_traces: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_traces < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 traces, got {n_traces}")));
    }
    model.validate()?;
    let trace = pulse.exchange_trace();
    let h_min = trace.dt.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt = (0.5 * h_min).min(1e9 / (2.0 * model.f_high));
    let span = (1e9 / (model.f_low * dt)).ceil().max(pulse.total_time() / dt + 2.0);
    let n = (span as usize).next_power_of_two();
    let fft = plan(n);
    let eps0 = pulse.device().eps0;
    let dbz = pulse.dbz();
    let target = pulse.target().su2();

    let infid: Vec<f64> = (0..n_traces)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let x = synthesize(model, n, dt, fft.as_ref(), &mut rng);
            let mut noisy = trace.clone();
            for (k, j) in noisy.j.iter_mut().enumerate() {
                for (node, jn) in j.iter_mut().enumerate() {
                    let t = trace.t_start[k] + GL3_NODES[node] * trace.dt[k];
                    *jn *= (sample_at(&x, dt, t) / eps0).exp();
                }
            }
            1.0 - su2_fidelity(&noisy.propagate(dbz), &target)
        })
        .collect();

    let m = infid.len() as f64;
    let mean = infid.iter().sum::<f64>() / m;
    let var = infid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(McEstimate { mean, stderr: (var / m).sqrt(), n_traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeviceModel, GateTarget};
    use crate::noise::fast_noise_infidelity;

    /// Constant-detuning pulse retargeted at its own noise-free gate.
    fn flat_pulse(eps: f64) -> PulseSequence {
        let p = PulseSequence::new(vec![eps; 12], 1, GateTarget::x90(), DeviceModel::default()).unwrap();
        p.with_target(GateTarget::from_rotation(&p.propagate().decompose()))
    }

    #[test]
    fn needs_enough_traces() {
        assert!(mc_fast_noise_oracle(&flat_pulse(0.0), &NoiseModel::default(), 99, 0).is_err());
    }

    #[test]
    fn zero_noise_gives_systematic_error() {
        let p = flat_pulse(100.0);
        let est = mc_fast_noise_oracle(&p, &NoiseModel::silent(), 100, 1).unwrap();
        assert!(est.mean.abs() < 1e-12 && est.stderr < 1e-12);
        let q = PulseSequence::new(vec![100.0; 12], 1, GateTarget::x90(), DeviceModel::default()).unwrap();
        let est = mc_fast_noise_oracle(&q, &NoiseModel::silent(), 100, 1).unwrap();
        let sys = 1.0 - su2_fidelity(&q.propagate_su2(), &GateTarget::x90().su2());
        assert!((est.mean - sys).abs() < 1e-12);
    }

    fn white(amp: f64) -> NoiseModel {
        NoiseModel {
            psd_exponent: 0.0,
            psd_amp: amp,
            f_low: 1e7,
            f_knee: 2e7,
            f_high: 3e9,
            ..NoiseModel::default()
        }
    }

    #[test]
    fn white_noise_matches_perturbative() {
        let p = flat_pulse(200.0);
        let m = white(2e-20);
        let pert = fast_noise_infidelity(&p, &m);
        assert!((1e-4..1e-2).contains(&pert), "{pert}");
        let mc = mc_fast_noise_oracle(&p, &m, 1000, 7).unwrap();
        assert!((mc.mean - pert).abs() < 0.1 * pert, "mc {} ± {} vs {pert}", mc.mean, mc.stderr);
    }

    #[test]
    fn quadratic_scaling() {
        let p = flat_pulse(200.0);
        let m = white(2e-20);
        let a = mc_fast_noise_oracle(&p, &m, 400, 3).unwrap();
        let b = mc_fast_noise_oracle(&p, &m.scaled(2.0), 400, 3).unwrap();
        let ratio = b.mean / a.mean;
        let err = 4.0 * (b.stderr / b.mean + a.stderr / a.mean);
        // same seeds, so most of the sampling noise cancels
        assert!((ratio - 4.0).abs() < err.max(0.2), "{ratio} ± {err}");
    }
}
