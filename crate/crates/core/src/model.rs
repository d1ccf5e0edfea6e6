// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Qubit and hardware model: exchange transfer function, rise-time filtered
//! rendering of AWG commands, clock condition and unitary propagation.
//!
//! Units: time in ns, angular frequencies in rad/ns, detuning in µV.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::unitary::{Rotation, Su2, Unitary2};

/// Physical and hardware parameters of one double dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceModel {
    /// Exchange prefactor, rad/ns.
    pub j0: f64,
    /// Exponential scale of the transfer function, µV.
    pub eps0: f64,
    /// Rise time of the single-pole filter, ns.
    pub tau_rise: f64,
    /// Lower detuning bound and idle baseline, µV.
    pub eps_min: f64,
    /// Upper detuning bound, µV.
    pub eps_max: f64,
    /// AWG sample period, ns.
    pub t_sample: f64,
    /// Propagation sub-steps per AWG sample.
    pub n_sub: u32,
}

impl Default for DeviceModel {
    /// Assumed parameters: 1 GS/s AWG, 1 ns rise time and a transfer function
    /// giving `J(eps_min) ≈ 0.0067 rad/ns` and `J(eps_max) ≈ 4.06 rad/ns`.
    fn default() -> Self {
        DeviceModel {
            j0: 1.0,
            eps0: 250.0,
            tau_rise: 1.0,
            eps_min: -1250.0,
            eps_max: 350.0,
            t_sample: 1.0,
            n_sub: 10,
        }
    }
}

impl DeviceModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("j0", self.j0),
            ("eps0", self.eps0),
            ("tau_rise", self.tau_rise),
            ("t_sample", self.t_sample),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps_min.is_finite() && self.eps_max.is_finite() && self.eps_min < self.eps_max) {
            return Err(Error::InvalidParameter(format!(
                "need eps_min < eps_max, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.n_sub == 0 {
            return Err(Error::InvalidParameter("n_sub must be at least 1".into()));
        }
        Ok(())
    }

    /// `J(ε) = j0 exp(ε/eps0)`.
    #[inline]
    pub fn exchange(&self, eps: f64) -> f64 {
        exchange_j(eps, self)
    }

    pub fn j_min(&self) -> f64 {
        self.exchange(self.eps_min)
    }

    /// Idle wait appended to every gate.
    pub fn wait_time(&self) -> f64 {
        4.0 * self.tau_rise
    }

    pub fn clamp(&self, eps: f64) -> f64 {
        eps.clamp(self.eps_min, self.eps_max)
    }
}

/// Exchange coupling for detuning `eps`.
#[inline]
pub fn exchange_j(eps: f64, device: &DeviceModel) -> f64 {
    device.j0 * (eps / device.eps0).exp()
}

/// Overhauser gradient satisfying `sqrt(ΔBz² + J_min²)·T = 2π n_dbz`.
pub fn clocked_dbz(n_dbz: u32, total_time: f64, j_min: f64) -> Result<f64> {
    let omega = TAU * n_dbz as f64 / total_time;
    if !(omega > j_min) || !total_time.is_finite() || total_time <= 0.0 {
        return Err(Error::InfeasibleClock { n_dbz, total_time, j_min });
    }
    Ok((omega * omega - j_min * j_min).sqrt())
}

/// Target rotation `exp(−i φ_t n_t·σ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateTarget {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl GateTarget {
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidParameter("target axis must be non-zero".into()));
        }
        if !(0.0..=TAU).contains(&angle) {
            return Err(Error::InvalidParameter(format!("target angle {angle} outside [0, 2π]")));
        }
        Ok(GateTarget { axis: [axis[0] / norm, axis[1] / norm, axis[2] / norm], angle })
    }

    /// π/2 about +x.
    pub fn x90() -> Self {
        GateTarget { axis: [1.0, 0.0, 0.0], angle: PI / 2.0 }
    }

    /// π/2 about −y.
    pub fn y90m() -> Self {
        GateTarget { axis: [0.0, -1.0, 0.0], angle: PI / 2.0 }
    }

    /// π about +x.
    pub fn x180() -> Self {
        GateTarget { axis: [1.0, 0.0, 0.0], angle: PI }
    }

    pub fn su2(&self) -> Su2 {
        Su2::rotation(self.angle, self.axis)
    }

    pub fn unitary(&self) -> Unitary2 {
        self.su2().to_unitary()
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.angle * self.axis[0], self.angle * self.axis[1], self.angle * self.axis[2]]
    }

    /// Target equal to a given rotation; degenerate rotations map to the identity about +z.
    pub fn from_rotation(r: &Rotation) -> Self {
        if r.degenerate {
            return GateTarget { axis: [0.0, 0.0, 1.0], angle: 0.0 };
        }
        GateTarget { axis: r.axis, angle: r.angle.clamp(0.0, TAU) }
    }
}

/// Detuning trace on the propagation sub-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Sub-step start times, ns.
    pub t_start: Vec<f64>,
    /// Sub-step durations, ns.
    pub dt: Vec<f64>,
    /// Filtered detuning at each sub-step midpoint, µV.
    pub eps_mid: Vec<f64>,
    /// Filtered detuning at the three Gauss–Legendre nodes of each sub-step, µV.
    pub eps_nodes: Vec<[f64; 3]>,
    /// Filtered detuning at the end of the trace, µV.
    pub eps_final: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.dt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dt.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt.iter().sum()
    }
}

/// Gauss–Legendre nodes on `[0, 1]` used inside each sub-step.
pub(crate) const GL3_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7, // sqrt(15)/10
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
pub(crate) const GL3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// First-order low-pass response of piecewise-constant commands.
///
/// `commands` are `(level, duration, n_steps)` blocks; the filter starts at `entry`.
pub fn render_blocks(commands: &[(f64, f64, usize)], entry: f64, tau: f64, t0: f64) -> Waveform {
    let cap: usize = commands.iter().map(|c| c.2).sum();
    let mut w = Waveform {
        t_start: Vec::with_capacity(cap),
        dt: Vec::with_capacity(cap),
        eps_mid: Vec::with_capacity(cap),
        eps_nodes: Vec::with_capacity(cap),
        eps_final: entry,
    };
    let mut state = entry;
    let mut t = t0;
    for &(level, duration, n_steps) in commands {
        let h = duration / n_steps as f64;
        let offset = state - level;
        for m in 0..n_steps {
            let s0 = m as f64 * h;
            let at = |s: f64| level + offset * (-s / tau).exp();
            w.t_start.push(t + s0);
            w.dt.push(h);
            w.eps_mid.push(at(s0 + 0.5 * h));
            w.eps_nodes.push([
                at(s0 + GL3_NODES[0] * h),
                at(s0 + GL3_NODES[1] * h),
                at(s0 + GL3_NODES[2] * h),
            ]);
        }
        state = level + offset * (-duration / tau).exp();
        t += duration;
    }
    w.eps_final = state;
    w
}

/// Exchange values on the sub-grid, ready for propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeTrace {
    pub dt: Vec<f64>,
    pub t_start: Vec<f64>,
    /// J at the three Gauss–Legendre nodes of each sub-step, rad/ns.
    pub j: Vec<[f64; 3]>,
}

impl ExchangeTrace {
    pub fn from_waveform(w: &Waveform, device: &DeviceModel) -> Self {
        ExchangeTrace {
            dt: w.dt.clone(),
            t_start: w.t_start.clone(),
            j: w
                .eps_nodes
                .iter()
                .map(|e| [device.exchange(e[0]), device.exchange(e[1]), device.exchange(e[2])])
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dt.is_empty()
    }

    /// Sub-step average of J.
    pub fn mean_j(&self, k: usize) -> f64 {
        let j = &self.j[k];
        GL3_WEIGHTS[0] * j[0] + GL3_WEIGHTS[1] * j[1] + GL3_WEIGHTS[2] * j[2]
    }

    pub fn propagate(&self, dbz: f64) -> Su2 {
        self.propagate_scaled(dbz, |_| 1.0)
    }

    /// Propagates with `J → J·scale(k)` on sub-step `k`.
    pub fn propagate_scaled(&self, dbz: f64, scale: impl Fn(usize) -> f64) -> Su2 {
        let mut u = Su2::IDENTITY;
        for k in 0..self.dt.len() {
            let s = scale(k);
            let j = &self.j[k];
            u = magnus_step([j[0] * s, j[1] * s, j[2] * s], dbz, self.dt[k]) * u;
        }
        u
    }

    /// Propagators from t=0 to the three Gauss–Legendre nodes of every sub-step.
    pub fn node_propagators(&self, dbz: f64) -> Vec<[Su2; 3]> {
        let mut out = Vec::with_capacity(self.dt.len());
        let mut u = Su2::IDENTITY;
        for k in 0..self.dt.len() {
            let j = self.j[k];
            let h = self.dt[k];
            let partial = |c: f64| {
                let js = GL3_NODES.map(|s| lagrange3(j, c * s));
                magnus_step(js, dbz, c * h) * u
            };
            out.push(GL3_NODES.map(partial));
            u = magnus_step(j, dbz, h) * u;
        }
        out
    }
}

/// Quadratic through the sub-step node values, evaluated at fraction `s`.
#[inline]
fn lagrange3(v: [f64; 3], s: f64) -> f64 {
    let [a, b, c] = GL3_NODES;
    v[0] * (s - b) * (s - c) / ((a - b) * (a - c))
        + v[1] * (s - a) * (s - c) / ((b - a) * (b - c))
        + v[2] * (s - a) * (s - b) / ((c - a) * (c - b))
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Sixth-order Magnus factor for `H(t) = (J(t) σz + ΔBz σx)/2` over one sub-step,
/// from J sampled at the Gauss–Legendre nodes. su(2) brackets are cross products.
#[inline]
pub fn magnus_step(j: [f64; 3], dbz: f64, h: f64) -> Su2 {
    const SQRT15_3: f64 = 1.290_994_448_735_805_6; // sqrt(15)/3
    let a1 = [h * dbz, 0.0, h * j[1]];
    let a2 = [0.0, 0.0, SQRT15_3 * h * (j[2] - j[0])];
    let a3 = [0.0, 0.0, 10.0 / 3.0 * h * (j[2] - 2.0 * j[1] + j[0])];
    let c1 = cross(a1, a2);
    let inner = [2.0 * a3[0] + c1[0], 2.0 * a3[1] + c1[1], 2.0 * a3[2] + c1[2]];
    let c2 = cross(a1, inner);
    let c2 = [-c2[0] / 60.0, -c2[1] / 60.0, -c2[2] / 60.0];
    let l = [
        -20.0 * a1[0] - a3[0] + c1[0],
        -20.0 * a1[1] - a3[1] + c1[1],
        -20.0 * a1[2] - a3[2] + c1[2],
    ];
    let r = [a2[0] + c2[0], a2[1] + c2[1], a2[2] + c2[2]];
    let lr = cross(l, r);
    let omega = [
        a1[0] + a3[0] / 12.0 + lr[0] / 240.0,
        a1[1] + a3[1] / 12.0 + lr[1] / 240.0,
        a1[2] + a3[2] / 12.0 + lr[2] / 240.0,
    ];
    let angle = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if angle == 0.0 {
        return Su2::IDENTITY;
    }
    let (s, c) = (0.5 * angle).sin_cos();
    let k = s / angle;
    Su2 { w: c, x: k * omega[0], y: k * omega[1], z: k * omega[2] }
}

/// One gate: AWG detuning samples plus clock quantities and target.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    eps: Vec<f64>,
    n_dbz: u32,
    dbz: f64,
    total_time: f64,
    target: GateTarget,
    device: DeviceModel,
}

/// Relative tolerance of the clock condition.
pub const CLOCK_RTOL: f64 = 1e-12;

impl PulseSequence {
    /// Builds a clocked pulse: `T = n_seg·t_sample + 4 τ_rise`, ΔBz from the clock condition.
    pub fn new(eps: Vec<f64>, n_dbz: u32, target: GateTarget, device: DeviceModel) -> Result<Self> {
        device.validate()?;
        let total_time = eps.len() as f64 * device.t_sample + device.wait_time();
        let dbz = clocked_dbz(n_dbz, total_time, device.j_min())?;
        Self::checked(eps, n_dbz, dbz, total_time, target, device)
    }

    /// Rebuilds a pulse from stored fields, re-checking every invariant.
    pub fn from_parts(
        eps: Vec<f64>,
        n_dbz: u32,
        dbz: f64,
        total_time: f64,
        target: GateTarget,
        device: DeviceModel,
    ) -> Result<Self> {
        device.validate()?;
        let expect_t = eps.len() as f64 * device.t_sample + device.wait_time();
        if (total_time - expect_t).abs() > CLOCK_RTOL * expect_t {
            return Err(Error::Constraint(format!(
                "total time {total_time} ns does not equal n_seg·t_sample + 4·tau_rise = {expect_t} ns"
            )));
        }
        Self::checked(eps, n_dbz, dbz, total_time, target, device)
    }

    fn checked(
        eps: Vec<f64>,
        n_dbz: u32,
        dbz: f64,
        total_time: f64,
        target: GateTarget,
        device: DeviceModel,
    ) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::Constraint("pulse needs at least one sample".into()));
        }
        for (j, &e) in eps.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::NonFinite(format!("eps[{j}] = {e}")));
            }
            if e < device.eps_min || e > device.eps_max {
                return Err(Error::Constraint(format!(
                    "eps[{j}] = {e} outside [{}, {}]",
                    device.eps_min, device.eps_max
                )));
            }
        }
        let j_min = device.j_min();
        let lhs = (dbz * dbz + j_min * j_min).sqrt() * total_time;
        let rhs = TAU * n_dbz as f64;
        if !(dbz.is_finite() && dbz > 0.0) || (lhs - rhs).abs() > CLOCK_RTOL * rhs.max(1.0) {
            return Err(Error::Constraint(format!(
                "clock condition violated: sqrt(dbz² + J_min²)·T = {lhs}, expected {rhs}"
            )));
        }
        if !(j_min < dbz / 10.0) {
            return Err(Error::Constraint(format!(
                "J(eps_min) = {j_min} rad/ns is not below ΔBz/10 = {}",
                dbz / 10.0
            )));
        }
        Ok(PulseSequence { eps, n_dbz, dbz, total_time, target, device })
    }

    /// Same clocking and target with new samples.
    pub fn with_eps(&self, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != self.eps.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                self.eps.len(),
                eps.len()
            )));
        }
        Self::checked(eps, self.n_dbz, self.dbz, self.total_time, self.target, self.device)
    }

    /// Same samples and clocking aimed at another target.
    pub fn with_target(&self, target: GateTarget) -> Self {
        PulseSequence { target, ..self.clone() }
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn n_seg(&self) -> usize {
        self.eps.len()
    }

    pub fn n_dbz(&self) -> u32 {
        self.n_dbz
    }

    pub fn dbz(&self) -> f64 {
        self.dbz
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn target(&self) -> &GateTarget {
        &self.target
    }

    pub fn device(&self) -> &DeviceModel {
        &self.device
    }

    /// Trailing idle window, ns.
    pub fn wait_time(&self) -> f64 {
        self.total_time - self.eps.len() as f64 * self.device.t_sample
    }

    /// Command blocks for the sub-grid, keeping this pulse's timing.
    fn command_blocks(&self) -> Vec<(f64, f64, usize)> {
        let d = &self.device;
        let n_sub = d.n_sub as usize;
        let h = d.t_sample / n_sub as f64;
        let mut blocks: Vec<(f64, f64, usize)> =
            self.eps.iter().map(|&e| (e, d.t_sample, n_sub)).collect();
        let wait = self.wait_time();
        let n_wait = ((wait / h) - 1e-9).ceil().max(1.0) as usize;
        blocks.push((d.eps_min, wait, n_wait));
        blocks
    }

    /// Rise-filtered detuning with this pulse's own device.
    pub fn rendered_waveform(&self) -> Waveform {
        self.rendered_with_tau(self.device.tau_rise)
    }

    /// Same timing, different filter time constant (model mismatch studies).
    pub fn rendered_with_tau(&self, tau_rise: f64) -> Waveform {
        render_blocks(&self.command_blocks(), self.device.eps_min, tau_rise, 0.0)
    }

    /// Filtered detuning at time `t` (ns), `0 ≤ t ≤ T`.
    pub fn filtered_value_at(&self, t: f64) -> f64 {
        let d = &self.device;
        let mut state = d.eps_min;
        let mut t0 = 0.0;
        for (level, duration, _) in self.command_blocks() {
            if t <= t0 + duration {
                return level + (state - level) * (-(t - t0) / d.tau_rise).exp();
            }
            state = level + (state - level) * (-duration / d.tau_rise).exp();
            t0 += duration;
        }
        state
    }

    /// Exchange trace under `physics` (transfer function and rise time), keeping this pulse's timing.
    pub fn exchange_trace_with(&self, physics: &DeviceModel) -> ExchangeTrace {
        let w = self.rendered_with_tau(physics.tau_rise);
        ExchangeTrace::from_waveform(&w, physics)
    }

    pub fn exchange_trace(&self) -> ExchangeTrace {
        self.exchange_trace_with(&self.device)
    }

    pub fn propagate_su2(&self) -> Su2 {
        self.exchange_trace().propagate(self.dbz)
    }

    /// Noise-free gate unitary.
    pub fn propagate(&self) -> Unitary2 {
        self.propagate_su2().to_unitary()
    }
}

/// Free-function form of [`PulseSequence::propagate`].
pub fn propagate(pulse: &PulseSequence) -> Unitary2 {
    pulse.propagate()
}

/// Free-function form of [`PulseSequence::rendered_waveform`].
pub fn rendered_waveform(pulse: &PulseSequence) -> Waveform {
    pulse.rendered_waveform()
}

/// Back-to-back pulses with the filter state carried across boundaries.
pub fn propagate_concatenated(pulses: &[PulseSequence]) -> Unitary2 {
    let mut u = Su2::IDENTITY;
    let mut entry = match pulses.first() {
        Some(p) => p.device.eps_min,
        None => return Unitary2::identity(),
    };
    let mut t0 = 0.0;
    for p in pulses {
        let w = render_blocks(&p.command_blocks(), entry, p.device.tau_rise, t0);
        entry = w.eps_final;
        t0 += p.total_time;
        u = ExchangeTrace::from_waveform(&w, &p.device).propagate(p.dbz) * u;
    }
    u.to_unitary()
}
