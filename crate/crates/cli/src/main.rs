// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! `pulseforge` command-line tool.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible model, 3 non-convergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pulseforge", version, about = "Noise-aware gate synthesis and calibration for S-T0 qubits")]
pub struct Cli {
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides PULSEFORGE_SEED and the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetName {
    X90,
    Y90m,
    X180,
    Custom,
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    #[arg(long, value_enum, default_value = "x90")]
    pub target: TargetName,
    /// Rotation axis for `--target custom`, e.g. `1,0,0`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub axis: Option<Vec<f64>>,
    /// Rotation angle in rad for `--target custom`.
    #[arg(long)]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Offsets,
    Mismatch,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize one gate by multistart Levenberg–Marquardt.
    Optimize {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 18)]
        nseg: usize,
        #[arg(long, default_value_t = 2)]
        ndbz: u32,
        /// Overrides `optimizer.restarts`.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Infidelity breakdown and rotation of a pulse file.
    Evaluate {
        pulse: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter function on a log grid, as CSV.
    Filterfn {
        pulse: PathBuf,
        #[arg(long, default_value_t = 1e5)]
        fmin: f64,
        #[arg(long, default_value_t = 3e9)]
        fmax: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best gates over a grid of segment counts and clock multiples.
    Scan {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_delimiter = ',', default_value = "12,18,24,30")]
        nsegs: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        ndbzs: Vec<u32>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noise-only infidelity under device-parameter errors, plus
    /// sensitivities and the filter-function peak.
    Robustness {
        pulse: PathBuf,
        /// Relative parameter error.
        #[arg(long, default_value_t = 0.2)]
        magnitude: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the perturbative fast-noise infidelity with time-domain Monte Carlo.
    McValidate {
        pulse: PathBuf,
        #[arg(long, default_value_t = 1000)]
        traces: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inject a systematic error and run the tuning loop once.
    Calibrate {
        #[arg(long, default_value = "pulses/x90.json")]
        x: PathBuf,
        #[arg(long, default_value = "pulses/y90m.json")]
        y: PathBuf,
        #[arg(long, value_enum, default_value = "offsets")]
        mechanism: MechanismArg,
        /// Target bin of the injected pair infidelity, `lo:hi`.
        #[arg(long, default_value = "0.04:0.06")]
        bin: String,
        /// Overrides `calibration.shots`.
        #[arg(long)]
        shots: Option<u64>,
        /// Noise-free outcomes instead of shot estimates.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Success rate of the tuning loop per injected-infidelity bin.
    BenchCalibration {
        #[arg(long, default_value = "pulses/x90.json")]
        x: PathBuf,
        #[arg(long, default_value = "pulses/y90m.json")]
        y: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// `lo:hi:count` equal-width bins.
        #[arg(long, default_value = "0:0.2:4")]
        bins: String,
        /// Overrides `calibration.shots`.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        mechanism: MechanismArg,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
