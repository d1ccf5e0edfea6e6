// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("clock condition infeasible: 2*pi*{n_dbz}/{total_time} ns <= J(eps_min) = {j_min} rad/ns")]
    InfeasibleClock {
        n_dbz: u32,
        total_time: f64,
        j_min: f64,
    },

    #[error("pulse violates constraints: {0}")]
    Constraint(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("frequency {0} Hz outside the noise band")]
    OutOfBand(f64),

    #[error("sampling step {dt} ns aliases the noise band up to {f_high} Hz")]
    Aliasing { dt: f64, f_high: f64 },

    #[error("no perturbation reached the requested infidelity bin after {0} attempts")]
    UnreachableBin(usize),

    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
