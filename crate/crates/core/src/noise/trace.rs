// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Gaussian detuning-noise traces by frequency-domain colouring.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::substream;

use super::NoiseModel;

/// Number of samples for `duration / dt`, checking the grid and the band.
pub(crate) fn trace_len(model: &NoiseModel, duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need positive duration and dt, got {duration} / {dt}"
        )));
    }
    if dt > 1e9 / (2.0 * model.f_high) * (1.0 + 1e-12) {
        return Err(Error::Aliasing { dt, f_high: model.f_high });
    }
    let ratio = duration / dt;
    let n = ratio.round();
    if n < 2.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "dt {dt} ns does not divide duration {duration} ns"
        )));
    }
    Ok(n as usize)
}

/// Inverse-FFT plan for traces of length `n`.
pub(crate) fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// One trace of `n` samples spaced `dt` ns, in µV.
///
/// Bin `k` (frequency `k/(n dt)`) inside `[f_low, f_high]` gets
/// `Z_k = z √(S Δf / 2)` with `E|z|² = 1`; the trace is `2 Re Σ_k Z_k e^{2πikm/n}`,
/// so its variance is `Σ_k S(f_k) Δf`.
pub(crate) fn synthesize(
    model: &NoiseModel,
    n: usize,
    dt: f64,
    fft: &dyn Fft<f64>,
    rng: &mut impl Rng,
) -> Vec<f64> {
    if !model.has_spectrum() {
        return vec![0.0; n];
    }
    let df = 1e9 / (n as f64 * dt);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    // Nyquist bin excluded: it has no conjugate partner
    for k in 1..n.div_ceil(2) {
        let f = k as f64 * df;
        if f < model.f_low || f > model.f_high {
            continue;
        }
        let a = (model.psd_uv2(f) * df / 2.0).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = Complex64::new(a * re, a * im);
        spec[k] = z;
        spec[n - k] = z.conj();
    }
    fft.process(&mut spec);
    spec.into_iter().map(|c| c.re).collect()
}

/// Stationary Gaussian δε(t) trace in µV sampled every `dt` ns over `duration` ns.
pub fn generate_noise_trace(model: &NoiseModel, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    let n = trace_len(model, duration, dt)?;
    let fft = plan(n);
    let mut rng = substream(seed, 0);
    Ok(synthesize(model, n, dt, fft.as_ref(), &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::FftPlanner;

    #[test]
    fn silent_model_is_zero() {
        let x = generate_noise_trace(&NoiseModel::silent(), 100.0, 0.1, 3).unwrap();
        assert_eq!(x.len(), 1000);
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_aliasing_and_bad_grid() {
        let m = NoiseModel::default();
        assert!(matches!(generate_noise_trace(&m, 100.0, 0.2, 0), Err(Error::Aliasing { .. })));
        assert!(matches!(
            generate_noise_trace(&m, 100.05, 0.1, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = NoiseModel::default();
        let a = generate_noise_trace(&m, 409.6, 0.1, 11).unwrap();
        let b = generate_noise_trace(&m, 409.6, 0.1, 11).unwrap();
        let c = generate_noise_trace(&m, 409.6, 0.1, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn white_band_variance_matches_integral() {
        let m = NoiseModel {
            psd_exponent: 0.0,
            psd_amp: 1e-16,
            f_low: 1e7,
            f_knee: 2e7,
            f_high: 2e9,
            ..NoiseModel::default()
        };
        let (n, dt) = (1 << 16, 0.1);
        let x = generate_noise_trace(&m, n as f64 * dt, dt, 5).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let want = m.psd_amp * 1e12 * (m.f_high - m.f_low);
        assert!((var - want).abs() < 0.05 * want, "{var} vs {want}");
    }

    #[test]
    fn periodogram_matches_psd_per_decade() {
        let m = NoiseModel { f_low: 3e6, f_knee: 1e8, ..NoiseModel::default() };
        let (n, dt) = (4096, 0.1);
        let df = 1e9 / (n as f64 * dt);
        let fwd = FftPlanner::new().plan_fft_forward(n);
        let mut acc = vec![0.0; n / 2];
        let seeds = 500;
        for seed in 0..seeds {
            let x = generate_noise_trace(&m, n as f64 * dt, dt, seed).unwrap();
            let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            fwd.process(&mut buf);
            for k in 1..n / 2 {
                // one-sided estimate 2|X|²/(n² Δf)
                acc[k] += 2.0 * buf[k].norm_sqr() / ((n * n) as f64 * df);
            }
        }
        for decade in [(1e7, 1e8), (1e8, 1e9)] {
            let (mut ratio, mut count) = (0.0, 0);
            for (k, a) in acc.iter().enumerate().skip(1) {
                let f = k as f64 * df;
                if f >= decade.0 && f < decade.1 && f <= m.f_high {
                    ratio += a / seeds as f64 / (super::super::psd_eval(f, &m).unwrap() * 1e12);
                    count += 1;
                }
            }
            let ratio = ratio / count as f64;
            assert!((ratio - 1.0).abs() < 0.1, "decade {decade:?}: {ratio}");
        }
    }
}
