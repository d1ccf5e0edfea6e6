// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Best-gate scan over segment count and ΔBz-rotation count.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{DeviceModel, GateTarget};
use crate::noise::NoiseModel;
use crate::rng::substream2;

use super::{multistart_optimize, GateProblem, LmConfig, OptimizationResult};

#[derive(Debug, Clone)]
pub struct ScanCell {
    pub n_seg: usize,
    pub n_dbz: u32,
    /// `Err` holds the reason a cell could not be built (e.g. the clock condition).
    pub result: std::result::Result<OptimizationResult, String>,
}

impl ScanCell {
    /// `(I_total, I_dbz, I_slow, I_fast)` of a feasible cell.
    pub fn infidelities(&self) -> Option<[f64; 4]> {
        self.result.as_ref().ok().map(|r| {
            let n = r.report.noise;
            [r.report.inf_total(), n.dbz, n.eps_slow, n.eps_fast]
        })
    }
}

/// One multi-start optimization per `(n_seg, n_dbz)` cell, in row-major order.
/// Each cell draws its starts from a seed derived from `(seed, n_seg, n_dbz)`.
#[allow(clippy::too_many_arguments)]
pub fn scan_grid(
    device: &DeviceModel,
    noise: &NoiseModel,
    target: &GateTarget,
    n_segs: &[usize],
    n_dbzs: &[u32],
    restarts: usize,
    seed: u64,
    cfg: &LmConfig,
) -> Result<Vec<ScanCell>> {
    let mut cells = Vec::with_capacity(n_segs.len() * n_dbzs.len());
    for &n_seg in n_segs {
        for &n_dbz in n_dbzs {
            let cell_seed = substream2(seed, n_seg as u64, n_dbz as u64).next_u64();
            let result = match GateProblem::new(*device, *noise, *target, n_seg, n_dbz) {
                Ok(p) => Ok(multistart_optimize(&p, restarts, cell_seed, cfg)?),
                Err(e @ (Error::InfeasibleClock { .. } | Error::Constraint(_))) => Err(e.to_string()),
                Err(e) => return Err(e),
            };
            cells.push(ScanCell { n_seg, n_dbz, result });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lists_give_empty_table() {
        let d = DeviceModel::default();
        let cells =
            scan_grid(&d, &NoiseModel::default(), &GateTarget::x90(), &[12, 18], &[], 1, 0, &LmConfig::default())
                .unwrap();
        assert!(cells.is_empty());
    }

    #[test]
    fn infeasible_cells_are_recorded() {
        // J(eps_min) = e^-1 rad/ns exceeds 2π/T for a 44 ns gate
        let d = DeviceModel { eps_min: -250.0, ..DeviceModel::default() };
        let cfg = LmConfig { max_iter: 2, ..LmConfig::default() };
        let cells = scan_grid(&d, &NoiseModel::default(), &GateTarget::x90(), &[40], &[1], 1, 0, &cfg).unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells[0].result.is_err());
        assert!(cells[0].infidelities().is_none());
    }
}
