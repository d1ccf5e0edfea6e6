// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Noise-aware pulse synthesis for singlet-triplet qubits.
//!
//! - [`model`]: exchange transfer function, rise-time filtering, clocked
//!   Overhauser gradient and unitary propagation.
//! - [`noise`]: quasistatic and spectral noise models, filter functions and a
//!   time-domain Monte Carlo check.
//! - [`optim`]: Levenberg–Marquardt gate synthesis, grid and robustness scans.
//! - [`calibration`]: simulated bootstrap-tomography tuning loop.
//! - [`io`]: pulse, result and report file formats.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod model;
pub mod noise;
pub mod optim;
pub mod rng;
pub mod unitary;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use fidelity::avg_gate_fidelity;
pub use model::{DeviceModel, GateTarget, PulseSequence};
pub use noise::NoiseModel;
pub use unitary::{Rotation, Su2, Unitary2};
