// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pulseforge::calibration::{CalibrationConfig, NoiseWeights};
use pulseforge::optim::LmConfig;
use pulseforge::{DeviceModel, NoiseModel};

pub const SEED_ENV: &str = "PULSEFORGE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerBlock {
    pub restarts: usize,
    /// Exit code 3 when the best pulse misses its target by more than this.
    pub systematic_tolerance: f64,
    pub lm: LmConfig,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        OptimizerBlock { restarts: 100, systematic_tolerance: 1e-6, lm: LmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationBlock {
    pub shots: u64,
    pub weights: NoiseWeights,
    pub max_iter: usize,
    pub threshold: f64,
    pub max_trials: usize,
    pub lm: LmConfig,
}

impl Default for CalibrationBlock {
    fn default() -> Self {
        let c = CalibrationConfig::default();
        CalibrationBlock {
            shots: 10_000,
            weights: c.weights,
            max_iter: c.max_iter,
            threshold: c.threshold,
            max_trials: c.max_trials,
            lm: c.lm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub device: DeviceModel,
    pub noise: NoiseModel,
    pub optimizer: OptimizerBlock,
    pub calibration: CalibrationBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            output_dir: PathBuf::from("out"),
            device: DeviceModel::default(),
            noise: NoiseModel::default(),
            optimizer: OptimizerBlock::default(),
            calibration: CalibrationBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.device.validate()?;
        self.noise.validate()?;
        self.optimizer.lm.validate()?;
        self.calibration.lm.validate()?;
        if self.optimizer.restarts == 0 {
            bail!("optimizer.restarts must be at least 1");
        }
        if self.calibration.shots == 0 {
            bail!("calibration.shots must be at least 1");
        }
        Ok(())
    }

    pub fn calibration_config(&self) -> CalibrationConfig {
        let c = &self.calibration;
        CalibrationConfig {
            max_iter: c.max_iter,
            threshold: c.threshold,
            weights: c.weights,
            exact: false,
            max_trials: c.max_trials,
            lm: c.lm,
            noise: self.noise,
        }
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Seed precedence: flag, then `PULSEFORGE_SEED`, then the config.
pub fn resolve_seed(flag: Option<u64>, config: u64) -> anyhow::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 7\n[device]\ntau_rise = 0.5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.device.tau_rise, 0.5);
        assert_eq!(cfg.device.eps0, DeviceModel::default().eps0);
        assert_eq!(cfg.optimizer, OptimizerBlock::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 7\n").is_err());
        assert!(toml::from_str::<RunConfig>("[noise]\nsigma = 1.0\n").is_err());
        assert!(toml::from_str::<RunConfig>("[optimizer.lm]\nlambda = 1.0\n").is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.sha256(), cfg.sha256());
    }

    #[test]
    fn flag_seed_wins() {
        assert_eq!(resolve_seed(Some(3), 42).unwrap(), 3);
    }
}
