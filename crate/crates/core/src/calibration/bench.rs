// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Error injection and the success-rate benchmark of the tuning loop.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PulseSequence;
use crate::optim::Perturbation;
use crate::rng::{substream, substream2};

use super::{systematic_infidelity_pair, Calibrator, ExperimentModel};

/// How systematic errors are introduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// The true device differs from the nominal one: `j0`, `eps0` and
    /// `tau_rise` are scaled by `1 + magnitude·d` for a random unit vector `d`.
    ParameterMismatch,
    /// The pulses are offset by `magnitude·z` µV with `z` standard normal;
    /// the true device is the nominal one.
    EpsOffsets,
}

impl Mechanism {
    pub const ALL: [Mechanism; 2] = [Mechanism::ParameterMismatch, Mechanism::EpsOffsets];

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::ParameterMismatch => "parameter_mismatch",
            Mechanism::EpsOffsets => "eps_offsets",
        }
    }

    /// Magnitude beyond which bracketing gives up.
    fn max_magnitude(&self) -> f64 {
        match self {
            Mechanism::ParameterMismatch => 0.9,
            Mechanism::EpsOffsets => 500.0,
        }
    }

    fn initial_magnitude(&self) -> f64 {
        match self {
            Mechanism::ParameterMismatch => 1e-3,
            Mechanism::EpsOffsets => 0.5,
        }
    }
}

/// A reproducible systematic error: starting pulses, true experiment and the
/// resulting pair infidelity.
#[derive(Debug, Clone)]
pub struct Injection {
    pub mechanism: Mechanism,
    pub magnitude: f64,
    /// Unit vector (mismatch) or standard-normal draws (offsets).
    pub direction: Vec<f64>,
    pub pulse_x: PulseSequence,
    pub pulse_y: PulseSequence,
    pub experiment: ExperimentModel,
    /// Mean of the two gates' systematic infidelities.
    pub i_s: f64,
}

fn draw_direction(mechanism: Mechanism, len: usize, rng: &mut impl Rng) -> Vec<f64> {
    match mechanism {
        Mechanism::ParameterMismatch => loop {
            let d: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-6 {
                return d.into_iter().map(|v| v / n).collect();
            }
        },
        Mechanism::EpsOffsets => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

fn apply(
    px: &PulseSequence,
    py: &PulseSequence,
    base: &ExperimentModel,
    mechanism: Mechanism,
    magnitude: f64,
    direction: &[f64],
) -> Result<Injection> {
    let (pulse_x, pulse_y, experiment) = match mechanism {
        Mechanism::ParameterMismatch => {
            let p = Perturbation {
                j0: 1.0 + magnitude * direction[0],
                eps0: 1.0 + magnitude * direction[1],
                tau_rise: 1.0 + magnitude * direction[2],
            };
            let experiment = ExperimentModel { true_device: p.apply(&base.true_device), ..*base };
            (px.clone(), py.clone(), experiment)
        }
        Mechanism::EpsOffsets => {
            let d = px.device();
            let shift = |p: &PulseSequence, z: &[f64]| {
                p.with_eps(p.eps().iter().zip(z).map(|(e, z)| d.clamp(e + magnitude * z)).collect())
            };
            let n = px.n_seg();
            (shift(px, &direction[..n])?, shift(py, &direction[n..])?, *base)
        }
    };
    let i = systematic_infidelity_pair(&pulse_x, &pulse_y, &experiment);
    Ok(Injection {
        mechanism,
        magnitude,
        direction: direction.to_vec(),
        pulse_x,
        pulse_y,
        experiment,
        i_s: 0.5 * (i[0] + i[1]),
    })
}

/// Injects an error of the given magnitude along a seeded random direction.
/// `base` is the experiment before injection, usually matched to the pulses.
pub fn inject_errors(
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    base: &ExperimentModel,
    magnitude: f64,
    mechanism: Mechanism,
    seed: u64,
) -> Result<Injection> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("magnitude must be >= 0, got {magnitude}")));
    }
    let dir = draw_direction(mechanism, pulse_x.n_seg() + pulse_y.n_seg(), &mut substream(seed, 0));
    apply(pulse_x, pulse_y, base, mechanism, magnitude, &dir)
}

pub const MAX_INJECTION_ATTEMPTS: usize = 10_000;

/// Injects an error whose pair infidelity lies in `[lo, hi]`.
///
/// Each attempt draws a direction, brackets the bin centre along it by
/// doubling the magnitude and bisects until the infidelity lands in the bin.
pub fn inject_into_bin(
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    base: &ExperimentModel,
    bin: (f64, f64),
    mechanism: Mechanism,
    seed: u64,
) -> Result<Injection> {
    let (lo, hi) = bin;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let inside = |inj: &Injection| inj.i_s >= lo && inj.i_s <= hi;
    let len = pulse_x.n_seg() + pulse_y.n_seg();
    let zero = apply(pulse_x, pulse_y, base, mechanism, 0.0, &vec![0.0; len.max(3)])?;
    if inside(&zero) {
        return Ok(zero);
    }
    if zero.i_s > hi {
        return Err(Error::UnreachableBin(0));
    }
    let mid = 0.5 * (lo + hi);
    for attempt in 0..MAX_INJECTION_ATTEMPTS {
        let dir = draw_direction(mechanism, len, &mut substream(seed, attempt as u64));
        let at = |m: f64| apply(pulse_x, pulse_y, base, mechanism, m, &dir);
        let (mut a, mut b) = (0.0, mechanism.initial_magnitude());
        let mut hit = None;
        while b <= mechanism.max_magnitude() {
            let inj = at(b)?;
            if inside(&inj) {
                return Ok(inj);
            }
            if inj.i_s > mid {
                hit = Some(b);
                break;
            }
            a = b;
            b *= 2.0;
        }
        let Some(mut b) = hit else { continue };
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let inj = at(m)?;
            if inside(&inj) {
                return Ok(inj);
            }
            if inj.i_s > mid {
                b = m;
            } else {
                a = m;
            }
        }
    }
    Err(Error::UnreachableBin(MAX_INJECTION_ATTEMPTS))
}

/// Outcome of one inject-and-calibrate run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub i_s: f64,
    pub converged: bool,
    pub iterations: usize,
    pub i_sys_final: [f64; 2],
    /// Mean modelled noise infidelity of the final pair.
    pub i_n_final: f64,
}

/// Per-bin summary. `median_iters` is over successful runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mechanism: Mechanism,
    pub success_rate: f64,
    pub median_iters: f64,
    pub in_p10: f64,
    pub in_p50: f64,
    pub in_p90: f64,
    /// Mean noise infidelity of the seed pulses.
    pub in_seed: f64,
    pub runs: Vec<BenchmarkRun>,
    /// Runs whose injection failed to reach the bin.
    pub unreachable: usize,
}

/// Linear-interpolated percentile of sorted data; NaN when empty.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Runs inject→calibrate `runs` times per bin. Run `r` of bin `b` uses
/// seed `substream2(seed, b, r)`, so rows do not depend on thread count.
#[allow(clippy::too_many_arguments)]
pub fn benchmark_success_rate(
    calibrator: &Calibrator,
    pulse_x: &PulseSequence,
    pulse_y: &PulseSequence,
    bins: &[(f64, f64)],
    runs: usize,
    shots: u64,
    mechanism: Mechanism,
    seed: u64,
) -> Result<Vec<BenchmarkRow>> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let base = ExperimentModel::matched(pulse_x, shots, seed);
    base.validate()?;
    let in_seed = {
        let n = calibrator.noise_infidelity(pulse_x, pulse_y);
        0.5 * (n[0] + n[1])
    };
    let mut rows = Vec::with_capacity(bins.len());
    for (b, &(lo, hi)) in bins.iter().enumerate() {
        let out: Vec<Option<BenchmarkRun>> = (0..runs)
            .into_par_iter()
            .map(|r| -> Result<Option<BenchmarkRun>> {
                let mut rng = substream2(seed, b as u64, r as u64);
                let (inj_seed, shot_seed) = (rng.next_u64(), rng.next_u64());
                let inj = match inject_into_bin(pulse_x, pulse_y, &base, (lo, hi), mechanism, inj_seed) {
                    Ok(inj) => inj,
                    Err(Error::UnreachableBin(_)) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let exp = ExperimentModel { seed: shot_seed, ..inj.experiment };
                let state = calibrator.run(&inj.pulse_x, &inj.pulse_y, &exp)?;
                let last = state.final_record();
                Ok(Some(BenchmarkRun {
                    i_s: inj.i_s,
                    converged: state.converged,
                    iterations: state.iteration,
                    i_sys_final: last.i_sys,
                    i_n_final: 0.5 * (last.i_n[0] + last.i_n[1]),
                }))
            })
            .collect::<Result<_>>()?;
        let unreachable = out.iter().filter(|r| r.is_none()).count();
        let done: Vec<BenchmarkRun> = out.into_iter().flatten().collect();
        let ok: Vec<&BenchmarkRun> = done.iter().filter(|r| r.converged).collect();
        let mut iters: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
        iters.sort_by(f64::total_cmp);
        let mut i_n: Vec<f64> = ok.iter().map(|r| r.i_n_final).collect();
        i_n.sort_by(f64::total_cmp);
        rows.push(BenchmarkRow {
            bin_lo: lo,
            bin_hi: hi,
            mechanism,
            success_rate: ok.len() as f64 / runs as f64,
            median_iters: percentile(&iters, 50.0),
            in_p10: percentile(&i_n, 10.0),
            in_p50: percentile(&i_n, 50.0),
            in_p90: percentile(&i_n, 90.0),
            in_seed,
            runs: done,
            unreachable,
        });
    }
    Ok(rows)
}
