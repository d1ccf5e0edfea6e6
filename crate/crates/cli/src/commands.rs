// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use pulseforge::calibration::{
    benchmark_success_rate, inject_into_bin, BenchmarkRow, Calibrator, ExperimentModel, Mechanism,
};
use pulseforge::io::{
    benchmark_csv, filter_function_csv, read_pulse, scan_csv, to_json, write_text, CalibrationReport, ReportFile,
    ResultFile,
};
use pulseforge::noise::{fast_noise_infidelity, filter_function, log_grid, mc_fast_noise_oracle, GateEvaluator};
use pulseforge::optim::{
    filter_peak, multistart_optimize, robustness_scan, scan_grid, sensitivities, FilterPeak, GateProblem,
    Perturbation, RobustnessReport, Sensitivity,
};
use pulseforge::fidelity::su2_fidelity;
use pulseforge::{Error, GateTarget, PulseSequence};

use crate::config::{resolve_seed, RunConfig};
use crate::{Cli, Command, MechanismArg, TargetArgs, TargetName};

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err.chain().any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::InfeasibleClock { .. })));
    if infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_INPUT
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    arguments: Vec<String>,
    config_sha256: String,
    seed: u64,
    versions: Versions,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    pulseforge: &'static str,
    pulseforge_cli: &'static str,
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
}

impl Ctx {
    fn out(&self, given: Option<PathBuf>, default: &str) -> PathBuf {
        given.unwrap_or_else(|| self.cfg.output_dir.join(default))
    }

    /// Writes `manifest.json` for `outputs` into `dir`, or `<file>.manifest.json`.
    fn manifest(&self, command: &str, at: &Path, outputs: &[PathBuf]) -> anyhow::Result<()> {
        let path = if at.extension().is_some() {
            let mut s = at.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        } else {
            at.join("manifest.json")
        };
        let m = Manifest {
            command,
            arguments: std::env::args().skip(1).collect(),
            config_sha256: self.cfg.sha256(),
            seed: self.seed,
            versions: Versions { pulseforge: pulseforge::VERSION, pulseforge_cli: env!("CARGO_PKG_VERSION") },
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        write_text(&path, &to_json(&m))?;
        Ok(())
    }
}

fn target(args: &TargetArgs) -> anyhow::Result<GateTarget> {
    Ok(match args.target {
        TargetName::X90 => GateTarget::x90(),
        TargetName::Y90m => GateTarget::y90m(),
        TargetName::X180 => GateTarget::x180(),
        TargetName::Custom => {
            let (Some(axis), Some(angle)) = (&args.axis, args.angle) else {
                bail!("--target custom needs --axis and --angle");
            };
            GateTarget::new([axis[0], axis[1], axis[2]], angle)?
        }
    })
}

fn target_label(args: &TargetArgs) -> &'static str {
    match args.target {
        TargetName::X90 => "x90",
        TargetName::Y90m => "y90m",
        TargetName::X180 => "x180",
        TargetName::Custom => "custom",
    }
}

fn load(path: &Path) -> anyhow::Result<(PulseSequence, String)> {
    read_pulse(path).with_context(|| format!("reading pulse {}", path.display()))
}

fn parse_bin(s: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi] = parts[..] else { bail!("bin must be lo:hi, got {s:?}") };
    let (lo, hi): (f64, f64) = (lo.parse()?, hi.parse()?);
    if !(lo >= 0.0 && hi > lo) {
        bail!("bin needs 0 <= lo < hi, got {s:?}");
    }
    Ok((lo, hi))
}

/// `lo:hi:count` into equal-width bins.
pub fn parse_bins(s: &str) -> anyhow::Result<Vec<(f64, f64)>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else { bail!("bins must be lo:hi:count, got {s:?}") };
    let (lo, hi, n): (f64, f64, usize) = (lo.parse()?, hi.parse()?, n.parse()?);
    if !(lo >= 0.0 && hi > lo && n >= 1) {
        bail!("bins need 0 <= lo < hi and count >= 1, got {s:?}");
    }
    let w = (hi - lo) / n as f64;
    Ok((0..n).map(|k| (lo + k as f64 * w, lo + (k + 1) as f64 * w)).collect())
}

fn mechanisms(m: MechanismArg) -> Vec<Mechanism> {
    match m {
        MechanismArg::Offsets => vec![Mechanism::EpsOffsets],
        MechanismArg::Mismatch => vec![Mechanism::ParameterMismatch],
        MechanismArg::Both => Mechanism::ALL.to_vec(),
    }
}

#[derive(Serialize)]
struct RobustnessFile {
    magnitude: f64,
    report: RobustnessReport,
    sensitivity: Sensitivity,
    filter_peak: FilterPeak,
}

#[derive(Serialize)]
struct McFile {
    i_perturbative: f64,
    /// Monte Carlo `1 − F` minus the systematic part.
    i_mc: f64,
    stderr: f64,
    n_traces: usize,
    i_systematic: f64,
    relative_difference: f64,
}

#[derive(Serialize)]
struct ScanFileCell {
    n_seg: usize,
    n_dbz: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ResultFile>,
}

#[derive(Serialize)]
struct BenchFile<'a> {
    runs: usize,
    shots: u64,
    seed: u64,
    rows: &'a [BenchmarkRow],
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = resolve_seed(cli.seed, cfg.seed)?;
    let ctx = Ctx { cfg, seed };
    let cfg = &ctx.cfg;
    match cli.command {
        Command::Optimize { target: t, nseg, ndbz, restarts, name, out } => {
            let gate = target(&t)?;
            let name = name.unwrap_or_else(|| target_label(&t).to_string());
            let problem = GateProblem::new(cfg.device, cfg.noise, gate, nseg, ndbz)?;
            let restarts = restarts.unwrap_or(cfg.optimizer.restarts);
            let result = multistart_optimize(&problem, restarts, seed, &cfg.optimizer.lm)?;
            let out = ctx.out(out, &format!("{name}.json"));
            write_text(&out, &to_json(&ResultFile::new(&result, &name)))?;
            ctx.manifest("optimize", &out, std::slice::from_ref(&out))?;
            let r = &result.report;
            eprintln!(
                "{name}: I_total {:.3e} (dbz {:.3e}, slow {:.3e}, fast {:.3e}, systematic {:.3e})",
                r.inf_total(),
                r.noise.dbz,
                r.noise.eps_slow,
                r.noise.eps_fast,
                r.inf_systematic
            );
            if r.inf_systematic > cfg.optimizer.systematic_tolerance {
                eprintln!("best pulse misses the target: systematic infidelity {:.3e}", r.inf_systematic);
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::Evaluate { pulse, out } => {
            let (p, name) = load(&pulse)?;
            let report = GateEvaluator::new(cfg.noise).report(&p);
            let out = ctx.out(out, &format!("{name}_report.json"));
            write_text(&out, &to_json(&ReportFile::new(&report, p.target(), &name)))?;
            ctx.manifest("evaluate", &out, std::slice::from_ref(&out))?;
        }
        Command::Filterfn { pulse, fmin, fmax, points, out } => {
            if !(fmin > 0.0 && fmin < fmax && fmax.is_finite()) {
                bail!("need 0 < fmin < fmax, got {fmin} / {fmax}");
            }
            if points == 0 {
                bail!("points must be at least 1");
            }
            let (p, name) = load(&pulse)?;
            let table = filter_function(&p, &log_grid(fmin, fmax, points));
            let out = ctx.out(out, &format!("{name}_filter.csv"));
            write_text(&out, &filter_function_csv(&table))?;
            ctx.manifest("filterfn", &out, std::slice::from_ref(&out))?;
        }
        Command::Scan { target: t, nsegs, ndbzs, restarts, out } => {
            let gate = target(&t)?;
            let cells = scan_grid(&cfg.device, &cfg.noise, &gate, &nsegs, &ndbzs, restarts, seed, &cfg.optimizer.lm)?;
            let dir = ctx.out(out, "scan");
            let csv = dir.join("scan.csv");
            let json = dir.join("scan.json");
            write_text(&csv, &scan_csv(&cells))?;
            let label = target_label(&t);
            let detail: Vec<ScanFileCell> = cells
                .iter()
                .map(|c| ScanFileCell {
                    n_seg: c.n_seg,
                    n_dbz: c.n_dbz,
                    error: c.result.as_ref().err().cloned(),
                    result: c.result.as_ref().ok().map(|r| ResultFile::new(r, label)),
                })
                .collect();
            write_text(&json, &to_json(&detail))?;
            ctx.manifest("scan", &dir, &[csv, json])?;
        }
        Command::Robustness { pulse, magnitude, out } => {
            if !(0.0..1.0).contains(&magnitude) {
                bail!("magnitude must lie in [0, 1), got {magnitude}");
            }
            let (p, name) = load(&pulse)?;
            let report = robustness_scan(&p, &cfg.noise, &Perturbation::standard_set(magnitude))?;
            eprintln!("{name}: nominal {:.3e}, worst {:.3e}", report.nominal, report.worst);
            let file = RobustnessFile { magnitude, report, sensitivity: sensitivities(&p), filter_peak: filter_peak(&p) };
            let out = ctx.out(out, &format!("{name}_robustness.json"));
            write_text(&out, &to_json(&file))?;
            ctx.manifest("robustness", &out, std::slice::from_ref(&out))?;
        }
        Command::McValidate { pulse, traces, out } => {
            let (p, name) = load(&pulse)?;
            let i_pert = fast_noise_infidelity(&p, &cfg.noise);
            let mc = mc_fast_noise_oracle(&p, &cfg.noise, traces, seed)?;
            let i_sys = (1.0 - su2_fidelity(&p.propagate_su2(), &p.target().su2())).max(0.0);
            let i_mc = mc.mean - i_sys;
            let file = McFile {
                i_perturbative: i_pert,
                i_mc,
                stderr: mc.stderr,
                n_traces: mc.n_traces,
                i_systematic: i_sys,
                relative_difference: (i_mc - i_pert) / i_pert,
            };
            eprintln!("{name}: perturbative {i_pert:.4e}, Monte Carlo {i_mc:.4e} ± {:.1e}", mc.stderr);
            let out = ctx.out(out, &format!("{name}_mc.json"));
            write_text(&out, &to_json(&file))?;
            ctx.manifest("mc-validate", &out, std::slice::from_ref(&out))?;
        }
        Command::Calibrate { x, y, mechanism, bin, shots, exact, out } => {
            let (px, _) = load(&x)?;
            let (py, _) = load(&y)?;
            let bin = parse_bin(&bin)?;
            let mech = match mechanism {
                MechanismArg::Offsets => Mechanism::EpsOffsets,
                MechanismArg::Mismatch => Mechanism::ParameterMismatch,
                MechanismArg::Both => bail!("calibrate takes a single mechanism"),
            };
            let shots = shots.unwrap_or(cfg.calibration.shots);
            let calibrator = Calibrator::new(&px, &py, pulseforge::calibration::CalibrationConfig {
                exact,
                ..cfg.calibration_config()
            })?;
            let base = ExperimentModel::matched(&px, shots, seed);
            let inj = inject_into_bin(&px, &py, &base, bin, mech, seed)?;
            let experiment = ExperimentModel { seed, ..inj.experiment };
            let state = calibrator.run(&inj.pulse_x, &inj.pulse_y, &experiment)?;
            let out = ctx.out(out, "calibration.json");
            write_text(&out, &to_json(&CalibrationReport::new(&state)))?;
            ctx.manifest("calibrate", &out, std::slice::from_ref(&out))?;
            let last = state.final_record();
            eprintln!(
                "injected I_s {:.3e}; after {} iterations I_sys = ({:.2e}, {:.2e})",
                inj.i_s, state.iteration, last.i_sys[0], last.i_sys[1]
            );
            if !state.converged {
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::BenchCalibration { x, y, runs, bins, shots, mechanism, out } => {
            let (px, _) = load(&x)?;
            let (py, _) = load(&y)?;
            let bins = parse_bins(&bins)?;
            let shots = shots.unwrap_or(cfg.calibration.shots);
            let calibrator = Calibrator::new(&px, &py, cfg.calibration_config())?;
            let dir = ctx.out(out, "bench");
            let mut outputs = Vec::new();
            for mech in mechanisms(mechanism) {
                let rows = benchmark_success_rate(&calibrator, &px, &py, &bins, runs, shots, mech, seed)?;
                let csv = dir.join(format!("bench_{}.csv", mech.name()));
                let json = dir.join(format!("bench_{}.json", mech.name()));
                write_text(&csv, &benchmark_csv(&rows))?;
                write_text(&json, &to_json(&BenchFile { runs, shots, seed, rows: &rows }))?;
                for r in &rows {
                    eprintln!(
                        "{} [{:.3}, {:.3}]: success {:.2}, median iterations {}",
                        mech.name(),
                        r.bin_lo,
                        r.bin_hi,
                        r.success_rate,
                        r.median_iters
                    );
                }
                outputs.extend([csv, json]);
            }
            ctx.manifest("bench-calibration", &dir, &outputs)?;
        }
    }
    Ok(0)
}
