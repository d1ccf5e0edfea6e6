// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit unitaries.
//!
//! Propagation works on [`Su2`], a unit quaternion `w·I − i(x σx + y σy + z σz)`,
//! which keeps products cheap and exactly special-unitary. Results that leave
//! the crate are converted to [`Unitary2`], a 2×2 complex matrix stored with
//! canonical global phase.

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use std::ops::Mul;

use crate::error::{Error, Result};

/// Threshold on `|Tr U|` below which the global phase is left untouched.
pub const PHASE_TIE_EPS: f64 = 1e-12;
/// Threshold on `sin(φ/2)` below which the rotation axis is undefined.
pub const AXIS_DEGENERATE_EPS: f64 = 1e-9;
/// Tolerance used when validating externally supplied matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

/// SU(2) element as a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// `exp(−i angle n·σ / 2)`; the axis is normalized here.
    pub fn rotation(angle: f64, axis: [f64; 3]) -> Su2 {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (0.5 * angle).sin_cos();
        if norm == 0.0 {
            return Su2 { w: c, x: 0.0, y: 0.0, z: s };
        }
        let k = s / norm;
        Su2 { w: c, x: k * axis[0], y: k * axis[1], z: k * axis[2] }
    }

    /// Evolution under `H = (J σz + ΔBz σx)/2` for a time `dt`, in closed form.
    #[inline]
    pub fn evolution(j: f64, dbz: f64, dt: f64) -> Su2 {
        let omega = (j * j + dbz * dbz).sqrt();
        if omega == 0.0 {
            return Su2::IDENTITY;
        }
        let (s, c) = (0.5 * omega * dt).sin_cos();
        let k = s / omega;
        Su2 { w: c, x: k * dbz, y: 0.0, z: k * j }
    }

    pub fn adjoint(&self) -> Su2 {
        Su2 { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// `Tr(self† · other)`, which is real for SU(2).
    #[inline]
    pub fn overlap(&self, other: &Su2) -> f64 {
        2.0 * (self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z)
    }

    /// Components of `U† σz U` along σx, σy, σz.
    #[inline]
    pub fn toggled_z(&self) -> [f64; 3] {
        let Su2 { w, x, y, z } = *self;
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ]
    }

    /// Bloch-sphere image of `+z` under this rotation, i.e. `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of `U|0⟩`.
    pub fn bloch_image_of_z(&self) -> [f64; 3] {
        let Su2 { w, x, y, z } = *self;
        [
            2.0 * (x * z + y * w),
            2.0 * (y * z - x * w),
            1.0 - 2.0 * (x * x + y * y),
        ]
    }

    pub fn to_unitary(&self) -> Unitary2 {
        Unitary2::from_su2(self)
    }
}

impl Mul for Su2 {
    type Output = Su2;

    #[inline]
    fn mul(self, b: Su2) -> Su2 {
        let a = self;
        // (w1 − i a·σ)(w2 − i b·σ) = (w1 w2 − a·b) − i(w1 b + w2 a + a×b)·σ
        Su2 {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + b.w * a.x + a.y * b.z - a.z * b.y,
            y: a.w * b.y + b.w * a.y + a.z * b.x - a.x * b.z,
            z: a.w * b.z + b.w * a.z + a.x * b.y - a.y * b.x,
        }
    }
}

/// Rotation angle/axis pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub angle: f64,
    pub axis: [f64; 3],
    /// Set when `sin(φ/2)` is too small to define an axis; the axis is then `+z`.
    pub degenerate: bool,
}

impl Rotation {
    /// `φ n` as a 3-vector.
    pub fn vector(&self) -> [f64; 3] {
        [self.angle * self.axis[0], self.angle * self.axis[1], self.angle * self.axis[2]]
    }

    /// The same rotation written as `(2π − φ, −n)`.
    pub fn complement(&self) -> Rotation {
        Rotation {
            angle: TAU - self.angle,
            axis: [-self.axis[0], -self.axis[1], -self.axis[2]],
            degenerate: self.degenerate,
        }
    }
}

/// 2×2 unitary with canonical global phase: `Tr U` real and non-negative
/// whenever `|Tr U| > 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[C64; 2]; 2],
}

fn matmul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn dagger(a: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn canonicalize(m: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let mag = tr.norm();
    if mag <= PHASE_TIE_EPS {
        return m;
    }
    let phase = tr.conj() / mag;
    [[m[0][0] * phase, m[0][1] * phase], [m[1][0] * phase, m[1][1] * phase]]
}

impl Unitary2 {
    pub fn identity() -> Self {
        Su2::IDENTITY.to_unitary()
    }

    /// Validates unitarity (to [`UNITARITY_TOL`]) and fixes the global phase.
    pub fn from_matrix(m: [[C64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("unitary entry".into()));
        }
        let dev = unitarity_defect(&m);
        if dev > UNITARITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Unitary2 { m: canonicalize(m) })
    }

    pub fn from_su2(q: &Su2) -> Self {
        let i = C64::new(0.0, 1.0);
        let m = [
            [C64::new(q.w, -q.z), -i * C64::new(q.x, -q.y)],
            [-i * C64::new(q.x, q.y), C64::new(q.w, q.z)],
        ];
        Unitary2 { m: canonicalize(m) }
    }

    /// `exp(−i φ n·σ/2)`.
    pub fn rotation(angle: f64, axis: [f64; 3]) -> Self {
        Su2::rotation(angle, axis).to_unitary()
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// True when `|Tr U|` is too small to fix the global phase.
    pub fn is_phase_tie(&self) -> bool {
        self.trace().norm() <= PHASE_TIE_EPS
    }

    pub fn adjoint(&self) -> Self {
        Unitary2 { m: canonicalize(dagger(&self.m)) }
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.m)
    }

    pub fn frobenius_distance(&self, other: &Unitary2) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += (self.m[i][j] - other.m[i][j]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// The SU(2) representative whose trace is non-negative (raw sign kept on ties).
    pub fn to_su2(&self) -> Su2 {
        let m = &self.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let root = det.sqrt();
        let s = [[m[0][0] / root, m[0][1] / root], [m[1][0] / root, m[1][1] / root]];
        let mut q = Su2 {
            w: 0.5 * (s[0][0] + s[1][1]).re,
            x: -0.5 * (s[0][1].im + s[1][0].im),
            y: 0.5 * (s[1][0].re - s[0][1].re),
            z: 0.5 * (s[1][1].im - s[0][0].im),
        };
        if 2.0 * q.w.abs() > PHASE_TIE_EPS && q.w < 0.0 {
            q = Su2 { w: -q.w, x: -q.x, y: -q.y, z: -q.z };
        }
        q
    }

    /// Angle/axis decomposition `U = cos(φ/2) I − i sin(φ/2) n·σ` after phase stripping.
    pub fn decompose(&self) -> Rotation {
        let q = self.to_su2();
        let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        let mut angle = 2.0 * s.atan2(q.w);
        if angle < 0.0 {
            angle += TAU;
        }
        if angle >= TAU {
            angle -= TAU;
        }
        if s < AXIS_DEGENERATE_EPS {
            return Rotation { angle, axis: [0.0, 0.0, 1.0], degenerate: true };
        }
        Rotation { angle, axis: [q.x / s, q.y / s, q.z / s], degenerate: false }
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2 { m: canonicalize(matmul(&self.m, &rhs.m)) }
    }
}

fn unitarity_defect(m: &[[C64; 2]; 2]) -> f64 {
    let p = matmul(&dagger(m), m);
    let mut acc = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            acc += (v - C64::new(want, 0.0)).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Free-function form of [`Unitary2::decompose`].
pub fn decompose_rotation(u: &Unitary2) -> Rotation {
    u.decompose()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU { 0.0 } else { r }
}
