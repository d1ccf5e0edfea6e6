// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use pulseforge::optim::{multistart_optimize, GateProblem, LmConfig};
use pulseforge::{DeviceModel, GateTarget, NoiseModel};

#[test]
fn accepted_steps_never_raise_cost_and_bounds_hold() {
    let device = DeviceModel::default();
    let problem = GateProblem::new(device, NoiseModel::default(), GateTarget::x90(), 12, 1).unwrap();
    let cfg = LmConfig { max_iter: 40, ..LmConfig::default() };
    let result = multistart_optimize(&problem, 3, 5, &cfg).unwrap();
    let h = &result.cost_history_best;
    assert!(h.len() > 1);
    for w in h.windows(2) {
        assert!(w[1] <= w[0], "cost rose from {} to {}", w[0], w[1]);
    }
    for &e in result.pulse.eps() {
        assert!(e >= device.eps_min && e <= device.eps_max, "{e}");
    }
    assert_eq!(result.restart_costs.len(), 3);
    let best = result.restart_costs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(result.restart_costs[result.best_restart], best);
    assert_eq!(*h.last().unwrap(), best);
}

#[test]
fn restarts_are_independent_of_thread_count() {
    let problem =
        GateProblem::new(DeviceModel::default(), NoiseModel::default(), GateTarget::y90m(), 12, 1).unwrap();
    let cfg = LmConfig { max_iter: 10, ..LmConfig::default() };
    let a = multistart_optimize(&problem, 3, 8, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let b = pool.install(|| multistart_optimize(&problem, 3, 8, &cfg).unwrap());
    assert_eq!(a.pulse, b.pulse);
    assert_eq!(a.restart_costs, b.restart_costs);
}
