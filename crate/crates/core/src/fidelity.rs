// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Average gate fidelity between a realized process and a target unitary.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::unitary::{Su2, Unitary2, UNITARITY_TOL};

/// `(|Tr(U_t† U)|² + 2)/6` for a unitary process.
pub fn avg_gate_fidelity(u: &Unitary2, target: &Unitary2) -> Result<f64> {
    for m in [u, target] {
        let d = m.unitarity_defect();
        if d > UNITARITY_TOL {
            return Err(Error::NotUnitary(d));
        }
    }
    if u == target {
        return Ok(1.0);
    }
    let a = target.matrix();
    let b = u.matrix();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            tr += a[k][i].conj() * b[k][i];
        }
    }
    Ok(((tr.norm_sqr() + 2.0) / 6.0).min(1.0))
}

/// Same as [`avg_gate_fidelity`] for SU(2) elements, where the trace overlap is real.
#[inline]
pub fn su2_fidelity(u: &Su2, target: &Su2) -> f64 {
    if u == target {
        return 1.0;
    }
    let t = u.overlap(target);
    ((t * t + 2.0) / 6.0).min(1.0)
}

/// The six axial Bloch states `±x, ±y, ±z` as Bloch vectors.
const AXIAL: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

fn density(bloch: [f64; 3]) -> [[C64; 2]; 2] {
    let [x, y, z] = bloch;
    [
        [C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
        [C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0)],
    ]
}

fn conj_by(u: &[[C64; 2]; 2], rho: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut tmp = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            tmp[i][j] = u[i][0] * rho[0][j] + u[i][1] * rho[1][j];
        }
    }
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = tmp[i][0] * u[j][0].conj() + tmp[i][1] * u[j][1].conj();
        }
    }
    out
}

/// Six-axial-state fidelity of an ensemble of unitaries against a target:
/// the mean over samples of `(1/6) Σ_j Tr[U_t ρ_j U_t† · U ρ_j U†]`.
pub fn six_state_fidelity(samples: &[Unitary2], target: &Unitary2) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    for m in samples.iter().chain(std::iter::once(target)) {
        let d = m.unitarity_defect();
        if d > UNITARITY_TOL {
            return Err(Error::NotUnitary(d));
        }
    }
    let t = target.matrix();
    let ideal: Vec<_> = AXIAL.iter().map(|b| conj_by(&t, &density(*b))).collect();
    let mut acc = 0.0;
    for u in samples {
        let m = u.matrix();
        for (b, want) in AXIAL.iter().zip(&ideal) {
            let got = conj_by(&m, &density(*b));
            let mut tr = C64::new(0.0, 0.0);
            for i in 0..2 {
                for k in 0..2 {
                    tr += want[i][k] * got[k][i];
                }
            }
            acc += tr.re;
        }
    }
    Ok(acc / (6.0 * samples.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn perfect_gate() {
        let u = Unitary2::rotation(0.7, [0.2, 0.5, -0.1]);
        assert_eq!(avg_gate_fidelity(&u, &u).unwrap(), 1.0);
        assert_eq!(su2_fidelity(&u.to_su2(), &u.to_su2()), 1.0);
    }

    #[test]
    fn z_rotation_against_identity() {
        let id = Unitary2::identity();
        let quarter = Unitary2::rotation(PI / 2.0, [0.0, 0.0, 1.0]);
        let half = Unitary2::rotation(PI, [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(avg_gate_fidelity(&quarter, &id).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(avg_gate_fidelity(&half, &id).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(six_state_fidelity(&[quarter], &id).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(six_state_fidelity(&[half], &id).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn su2_form_matches() {
        let a = Su2::rotation(1.3, [1.0, 2.0, 3.0]);
        let b = Su2::rotation(2.9, [-1.0, 0.5, 0.2]);
        let f = avg_gate_fidelity(&a.to_unitary(), &b.to_unitary()).unwrap();
        assert_abs_diff_eq!(su2_fidelity(&a, &b), f, epsilon = 1e-14);
    }
}
