// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! First-order filter-function treatment of fast detuning noise.
//!
//! With `g(t) = J(t)/(2 ε0)` and toggling-frame components
//! `R_k(t) = ½ Tr(U(t)† σz U(t) σ_k)`, the filter function is
//! `F(ω) = Σ_k |∫ g R_k e^{−iωt} dt|²` (ω in rad/ns, F in µV⁻²) and the average
//! infidelity is `(2/3) ∫ S_ε(f) F(2πf) df` with the one-sided PSD in µV²/Hz.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::TAU;

use crate::model::{ExchangeTrace, PulseSequence, GL3_NODES, GL3_WEIGHTS};
use crate::unitary::Su2;

use super::NoiseModel;

/// Hz → rad/ns.
const HZ_TO_RAD_PER_NS: f64 = TAU * 1e-9;

/// `g·R_k` at the Gauss–Legendre nodes of every propagation sub-step.
///
/// The Fourier integral is taken per sub-step with the three-node rule, which
/// is exact for a constant integrand and keeps the resonant part of `F` free of
/// the `sinc²(ωh/2)` roll-off a staircase model would add.
#[derive(Debug, Clone, PartialEq)]
pub struct ToggledCoefficients {
    /// Node times, ns.
    pub t: Vec<f64>,
    /// Quadrature weights, ns.
    pub w: Vec<f64>,
    /// `g R_k` at each node, rad/ns per µV.
    pub c: Vec<[f64; 3]>,
}

impl ToggledCoefficients {
    /// Also returns the noise-free propagator of the whole trace.
    pub fn new(trace: &ExchangeTrace, dbz: f64, eps0: f64) -> (Self, Su2) {
        let n = 3 * trace.len();
        let mut out = ToggledCoefficients {
            t: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
        };
        for (k, nodes) in trace.node_propagators(dbz).iter().enumerate() {
            let h = trace.dt[k];
            for (i, u) in nodes.iter().enumerate() {
                let r = u.toggled_z();
                let g = trace.j[k][i] / (2.0 * eps0);
                out.t.push(trace.t_start[k] + GL3_NODES[i] * h);
                out.w.push(GL3_WEIGHTS[i] * h);
                out.c.push([g * r[0], g * r[1], g * r[2]]);
            }
        }
        (out, trace.propagate(dbz))
    }

    pub fn from_pulse(pulse: &PulseSequence) -> Self {
        Self::new(&pulse.exchange_trace(), pulse.dbz(), pulse.device().eps0).0
    }

    /// `F(ω)` with ω in rad/ns.
    pub fn filter_value(&self, omega: f64) -> f64 {
        let mut re = [0.0f64; 3];
        let mut im = [0.0f64; 3];
        for ((c, &w), &t) in self.c.iter().zip(&self.w).zip(&self.t) {
            let (s, co) = (omega * t).sin_cos();
            for k in 0..3 {
                let v = w * c[k];
                re[k] += v * co;
                im[k] -= v * s;
            }
        }
        (0..3).map(|k| re[k] * re[k] + im[k] * im[k]).sum()
    }

    /// `F(0) = Σ_k (∫ g R_k dt)²`.
    pub fn dc(&self) -> f64 {
        let mut acc = [0.0f64; 3];
        for (c, w) in self.c.iter().zip(&self.w) {
            for k in 0..3 {
                acc[k] += c[k] * w;
            }
        }
        acc.iter().map(|a| a * a).sum()
    }

    /// End of the integration window, ns.
    pub fn duration(&self) -> f64 {
        self.t.last().map_or(0.0, |t| t + self.w.last().unwrap())
    }
}

/// Filter function sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterFunctionTable {
    /// Hz.
    pub frequencies: Vec<f64>,
    /// `F(2πf)`, µV⁻².
    pub values: Vec<f64>,
}

impl FilterFunctionTable {
    /// Frequency of the largest value.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.frequencies
            .iter()
            .zip(&self.values)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, v)| (*f, *v))
    }

    /// Linear interpolation in log-frequency.
    pub fn value_at(&self, f: f64) -> Option<f64> {
        let i = self.frequencies.iter().position(|&x| x >= f)?;
        if i == 0 {
            return (self.frequencies[0] == f).then(|| self.values[0]);
        }
        let (f0, f1) = (self.frequencies[i - 1].ln(), self.frequencies[i].ln());
        let t = (f.ln() - f0) / (f1 - f0);
        Some(self.values[i - 1] + t * (self.values[i] - self.values[i - 1]))
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Filter function of a pulse on a frequency grid (Hz).
pub fn filter_function(pulse: &PulseSequence, grid: &[f64]) -> FilterFunctionTable {
    let coeffs = ToggledCoefficients::from_pulse(pulse);
    FilterFunctionTable {
        frequencies: grid.to_vec(),
        values: grid.iter().map(|&f| coeffs.filter_value(f * HZ_TO_RAD_PER_NS)).collect(),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

const PANEL_NODES: usize = 8;

/// Nodes and PSD-weighted quadrature weights for `∫ S_ε(f) (·) df` over the noise band.
///
/// Below the knee panels are log-spaced; above it they grow geometrically until
/// they reach half the oscillation period `1/T` of the filter function, then
/// stay uniform. Each panel carries an 8-node Gauss–Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralQuadrature {
    /// Hz.
    pub freqs: Vec<f64>,
    /// `w_i S(f_i)`, µV².
    pub weights: Vec<f64>,
}

impl SpectralQuadrature {
    pub fn new(model: &NoiseModel, duration_ns: f64, refine: usize) -> Self {
        let refine = refine.max(1) as f64;
        let (x, w) = gauss_legendre(PANEL_NODES);
        let mut freqs = Vec::new();
        let mut weights = Vec::new();
        if !model.has_spectrum() {
            return SpectralQuadrature { freqs, weights };
        }
        let push_linear = |a: f64, b: f64, freqs: &mut Vec<f64>, weights: &mut Vec<f64>| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in x.iter().zip(&w) {
                let f = mid + half * xi;
                freqs.push(f);
                weights.push(half * wi * model.psd_uv2(f));
            }
        };
        // power-law band, panels uniform in ln f
        let per_decade = 4.0 * refine;
        let decades = (model.f_knee / model.f_low).log10();
        let n_low = (decades * per_decade).ceil().max(1.0) as usize;
        let ratio = (model.f_knee / model.f_low).powf(1.0 / n_low as f64);
        let (lx, lw) = (x.clone(), w.clone());
        let mut a = model.f_low;
        for _ in 0..n_low {
            let b = a * ratio;
            let (la, lb) = (a.ln(), b.ln());
            let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
            for (xi, wi) in lx.iter().zip(&lw) {
                let f = (mid + half * xi).exp();
                freqs.push(f);
                weights.push(half * wi * f * model.psd_uv2(f));
            }
            a = b;
        }
        // white band
        let max_width = 1e9 / (2.0 * duration_ns.max(1e-3)) / refine;
        let growth = 10f64.powf(1.0 / (8.0 * refine)) - 1.0;
        let mut a = model.f_knee;
        while a < model.f_high * (1.0 - 1e-12) {
            let width = (a * growth).min(max_width);
            let b = (a + width).min(model.f_high);
            push_linear(a, b, &mut freqs, &mut weights);
            a = b;
        }
        SpectralQuadrature { freqs, weights }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// `(2/3) Σ_i w_i S(f_i) F(2π f_i)`.
    pub fn infidelity(&self, coeffs: &ToggledCoefficients) -> f64 {
        let acc: f64 = self
            .freqs
            .iter()
            .zip(&self.weights)
            .map(|(&f, &w)| w * coeffs.filter_value(f * HZ_TO_RAD_PER_NS))
            .sum();
        2.0 / 3.0 * acc
    }
}

/// Fast-noise infidelity with quadrature refined until successive results
/// differ by less than 1 %.
pub fn fast_noise_infidelity(pulse: &PulseSequence, model: &NoiseModel) -> f64 {
    adaptive_infidelity(&ToggledCoefficients::from_pulse(pulse), model)
}

pub(crate) fn adaptive_infidelity(coeffs: &ToggledCoefficients, model: &NoiseModel) -> f64 {
    if !model.has_spectrum() {
        return 0.0;
    }
    let t = coeffs.duration();
    let mut refine = 1;
    let mut prev = SpectralQuadrature::new(model, t, refine).infidelity(coeffs);
    while refine < 16 {
        refine *= 2;
        let next = SpectralQuadrature::new(model, t, refine).infidelity(coeffs);
        let converged = (next - prev).abs() <= 0.01 * next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if converged {
            break;
        }
    }
    prev
}

/// Quadratic form `I = (2/3) Σ_k c_kᵀ K c_k` with the spectral integral folded
/// into `K_{jl} = ∫ S(f) Re[φ_j(ω) φ_l(ω)*] df`, precomputed for one time grid.
///
/// `K` is stored as a thin factor `B Bᵀ`: a band-limited spectrum leaves it with
/// numerical rank close to `2 f_high T`.
#[derive(Debug, Clone)]
pub struct FastNoiseKernel {
    t: Vec<f64>,
    w: Vec<f64>,
    factor: DMatrix<f64>,
}

/// Eigenvalues below this fraction of the largest are dropped from the factor.
const KERNEL_RANK_RTOL: f64 = 1e-13;

impl FastNoiseKernel {
    /// Kernel for coefficients living on the node layout of `coeffs`.
    pub fn new(coeffs: &ToggledCoefficients, model: &NoiseModel, refine: usize) -> Self {
        let n = coeffs.t.len();
        let quad = SpectralQuadrature::new(model, coeffs.duration(), refine);
        let m = quad.len();
        let mut a = DMatrix::<f64>::zeros(n, 2 * m);
        for (i, (&f, &q)) in quad.freqs.iter().zip(&quad.weights).enumerate() {
            let omega = f * HZ_TO_RAD_PER_NS;
            let sq = q.sqrt();
            for j in 0..n {
                let (s, c) = (omega * coeffs.t[j]).sin_cos();
                a[(j, 2 * i)] = sq * coeffs.w[j] * c;
                a[(j, 2 * i + 1)] = sq * coeffs.w[j] * s;
            }
        }
        let eig = SymmetricEigen::new(&a * a.transpose());
        let top = eig.eigenvalues.amax();
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > KERNEL_RANK_RTOL * top).collect();
        let factor = DMatrix::from_fn(n, keep.len(), |j, c| {
            eig.eigenvectors[(j, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
        });
        FastNoiseKernel { t: coeffs.t.clone(), w: coeffs.w.clone(), factor }
    }

    pub fn for_pulse(pulse: &PulseSequence, model: &NoiseModel) -> Self {
        Self::new(&ToggledCoefficients::from_pulse(pulse), model, 1)
    }

    /// True when `coeffs` live on the node layout this kernel was built for.
    pub fn matches(&self, coeffs: &ToggledCoefficients) -> bool {
        self.t.len() == coeffs.t.len()
            && self.t.iter().zip(&coeffs.t).all(|(a, b)| (a - b).abs() < 1e-9)
            && self.w.iter().zip(&coeffs.w).all(|(a, b)| (a - b).abs() < 1e-9)
    }

    pub fn infidelity(&self, coeffs: &ToggledCoefficients) -> f64 {
        debug_assert!(self.matches(coeffs));
        let n = coeffs.c.len();
        let cm = DMatrix::from_fn(n, 3, |j, k| coeffs.c[j][k]);
        2.0 / 3.0 * self.factor.tr_mul(&cm).norm_squared()
    }
}
