// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! File formats: pulse and result JSON, calibration reports and CSV tables.
//!
//! Pulse file, version 1:
//!
//! ```json
//! {"version": 1, "name": "x90",
//!  "target": {"axis": [1, 0, 0], "angle": 1.5707963267948966},
//!  "t_sample_ns": 1.0, "eps_uV": [...], "n_dbz": 2, "dbz_rad_per_ns": 0.571,
//!  "device": {"j0_rad_per_ns": 1.0, "eps0_uV": 250.0, "tau_rise_ns": 1.0,
//!             "eps_min_uV": -1250.0, "eps_max_uV": 350.0, "n_sub": 10}}
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{BenchmarkRow, CalibrationRecord, CalibrationState};
use crate::error::{Error, Result};
use crate::model::{DeviceModel, GateTarget, PulseSequence};
use crate::noise::{FilterFunctionTable, GateReport, NoiseBreakdown};
use crate::optim::{OptimizationResult, ScanCell};

pub const PULSE_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceBlock {
    pub j0_rad_per_ns: f64,
    #[serde(rename = "eps0_uV")]
    pub eps0_uv: f64,
    pub tau_rise_ns: f64,
    #[serde(rename = "eps_min_uV")]
    pub eps_min_uv: f64,
    #[serde(rename = "eps_max_uV")]
    pub eps_max_uv: f64,
    pub n_sub: u32,
}

/// On-disk pulse. Result files carry the same fields plus their own, so
/// unknown top-level keys are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseFile {
    pub version: u32,
    pub name: String,
    pub target: GateTarget,
    pub t_sample_ns: f64,
    #[serde(rename = "eps_uV")]
    pub eps_uv: Vec<f64>,
    pub n_dbz: u32,
    pub dbz_rad_per_ns: f64,
    pub device: DeviceBlock,
}

impl PulseFile {
    pub fn from_pulse(pulse: &PulseSequence, name: &str) -> Self {
        let d = pulse.device();
        PulseFile {
            version: PULSE_FILE_VERSION,
            name: name.to_string(),
            target: *pulse.target(),
            t_sample_ns: d.t_sample,
            eps_uv: pulse.eps().to_vec(),
            n_dbz: pulse.n_dbz(),
            dbz_rad_per_ns: pulse.dbz(),
            device: DeviceBlock {
                j0_rad_per_ns: d.j0,
                eps0_uv: d.eps0,
                tau_rise_ns: d.tau_rise,
                eps_min_uv: d.eps_min,
                eps_max_uv: d.eps_max,
                n_sub: d.n_sub,
            },
        }
    }

    pub fn device(&self) -> DeviceModel {
        let d = &self.device;
        DeviceModel {
            j0: d.j0_rad_per_ns,
            eps0: d.eps0_uv,
            tau_rise: d.tau_rise_ns,
            eps_min: d.eps_min_uv,
            eps_max: d.eps_max_uv,
            t_sample: self.t_sample_ns,
            n_sub: d.n_sub,
        }
    }

    /// Validated pulse; the stored ΔBz must satisfy the clock condition.
    pub fn to_pulse(&self) -> Result<PulseSequence> {
        if self.version != PULSE_FILE_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        let device = self.device();
        let target = GateTarget::new(self.target.axis, self.target.angle)?;
        let total_time = self.eps_uv.len() as f64 * device.t_sample + device.wait_time();
        PulseSequence::from_parts(self.eps_uv.clone(), self.n_dbz, self.dbz_rad_per_ns, total_time, target, device)
    }
}

/// Checks `"version"` before the rest of the document so that future formats
/// fail with a version error rather than a field error.
fn check_version(text: &str) -> Result<()> {
    #[derive(Deserialize)]
    struct Probe {
        version: u32,
    }
    let probe: Probe = serde_json::from_str(text)?;
    if probe.version != PULSE_FILE_VERSION {
        return Err(Error::UnsupportedVersion(probe.version));
    }
    Ok(())
}

pub fn pulse_to_json(pulse: &PulseSequence, name: &str) -> String {
    to_json(&PulseFile::from_pulse(pulse, name))
}

/// Parses a pulse or result file. Returns the pulse and its name.
pub fn pulse_from_json(text: &str) -> Result<(PulseSequence, String)> {
    check_version(text)?;
    let file: PulseFile = serde_json::from_str(text)?;
    Ok((file.to_pulse()?, file.name))
}

pub fn write_pulse(path: &Path, pulse: &PulseSequence, name: &str) -> Result<()> {
    write_text(path, &pulse_to_json(pulse, name))
}

pub fn read_pulse(path: &Path) -> Result<(PulseSequence, String)> {
    pulse_from_json(&std::fs::read_to_string(path)?)
}

/// Infidelity channels as written to result and report files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityBlock {
    pub dbz: f64,
    pub eps_slow: f64,
    pub eps_fast: f64,
    pub systematic: f64,
    pub total: f64,
}

impl InfidelityBlock {
    pub fn new(noise: &NoiseBreakdown, systematic: f64) -> Self {
        InfidelityBlock {
            dbz: noise.dbz,
            eps_slow: noise.eps_slow,
            eps_fast: noise.eps_fast,
            systematic,
            total: noise.total() + systematic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    #[serde(flatten)]
    pub pulse: PulseFile,
    pub infidelity: InfidelityBlock,
    pub restarts: usize,
    pub seed: u64,
    pub best_restart: usize,
    pub termination: String,
    pub restart_costs: Vec<f64>,
    pub cost_history_best: Vec<f64>,
    pub wall_time_s: f64,
}

impl ResultFile {
    pub fn new(result: &OptimizationResult, name: &str) -> Self {
        ResultFile {
            pulse: PulseFile::from_pulse(&result.pulse, name),
            infidelity: InfidelityBlock::new(&result.report.noise, result.report.inf_systematic),
            restarts: result.restarts,
            seed: result.seed,
            best_restart: result.best_restart,
            termination: format!("{:?}", result.termination).to_lowercase(),
            restart_costs: result.restart_costs.clone(),
            cost_history_best: result.cost_history_best.clone(),
            wall_time_s: result.wall_time_s,
        }
    }
}

/// Evaluation of one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub name: String,
    pub axis: [f64; 3],
    pub angle: f64,
    pub target: GateTarget,
    pub infidelity: InfidelityBlock,
    /// Noise-free gate as `[[re, im], [re, im]; [re, im], [re, im]]`.
    pub unitary: [[[f64; 2]; 2]; 2],
}

impl ReportFile {
    pub fn new(report: &GateReport, target: &GateTarget, name: &str) -> Self {
        let m = report.u_realized.matrix();
        ReportFile {
            name: name.to_string(),
            axis: report.rotation.axis,
            angle: report.rotation.angle,
            target: *target,
            infidelity: InfidelityBlock::new(&report.noise, report.inf_systematic),
            unitary: m.map(|row| row.map(|c| [c.re, c.im])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<CalibrationRecord>,
    pub pulse_x: PulseFile,
    pub pulse_y: PulseFile,
}

impl CalibrationReport {
    pub fn new(state: &CalibrationState) -> Self {
        CalibrationReport {
            converged: state.converged,
            iterations: state.iteration,
            history: state.history.clone(),
            pulse_x: PulseFile::from_pulse(&state.pulse_x, "x90_calibrated"),
            pulse_y: PulseFile::from_pulse(&state.pulse_y, "y90m_calibrated"),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// 15 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.14e}")
    } else {
        "NaN".to_string()
    }
}

fn csv<const N: usize>(header: &str, rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn filter_function_csv(table: &FilterFunctionTable) -> String {
    csv("f_hz,F", table.frequencies.iter().zip(&table.values).map(|(f, v)| [fmt_num(*f), fmt_num(*v)]))
}

/// Failed cells are written with NaN infidelities.
pub fn scan_csv(cells: &[ScanCell]) -> String {
    csv(
        "n_seg,n_dbz,I_total,I_dbz,I_slow,I_fast",
        cells.iter().map(|c| {
            let i = c.infidelities().unwrap_or([f64::NAN; 4]);
            [c.n_seg.to_string(), c.n_dbz.to_string(), fmt_num(i[0]), fmt_num(i[1]), fmt_num(i[2]), fmt_num(i[3])]
        }),
    )
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    csv(
        "bin_lo,bin_hi,success_rate,median_iters,In_p10,In_p50,In_p90",
        rows.iter().map(|r| {
            [
                fmt_num(r.bin_lo),
                fmt_num(r.bin_hi),
                fmt_num(r.success_rate),
                fmt_num(r.median_iters),
                fmt_num(r.in_p10),
                fmt_num(r.in_p50),
                fmt_num(r.in_p90),
            ]
        }),
    )
}
