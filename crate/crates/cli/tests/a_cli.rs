// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pulseforge");

fn shipped(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../pulses").join(name).to_str().unwrap().to_owned()
}

fn run(args: &[&str], cwd: &Path, env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(cwd).env_remove("PULSEFORGE_SEED");
    if let Some(s) = env_seed {
        cmd.env("PULSEFORGE_SEED", s);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn evaluate_shipped_gate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["evaluate", &shipped("x90.json"), "--out", "r.json"], dir.path(), None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("r.json"));
    assert!(v["infidelity"]["systematic"].as_f64().unwrap() < 1e-8);
    assert!(v["infidelity"]["total"].as_f64().unwrap() < 5e-3);
    let m = json(&dir.path().join("r.json.manifest.json"));
    assert_eq!(m["command"], "evaluate");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn infeasible_clock_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["optimize", "--ndbz", "0", "--restarts", "1", "--out", "p.json"], dir.path(), None);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("corrupt.json"), "{\"version\": 1, \"eps\": [").unwrap();
    let mut doc = json(Path::new(&shipped("x90.json")));
    doc["version"] = 2.into();
    std::fs::write(p.join("v2.json"), doc.to_string()).unwrap();
    std::fs::write(p.join("bad.toml"), "seed = 1\nbogus = 2\n").unwrap();
    for args in [
        vec!["evaluate", "corrupt.json"],
        vec!["evaluate", "v2.json"],
        vec!["--config", "bad.toml", "evaluate", &shipped("x90.json")],
        vec!["evaluate", "missing.json"],
    ] {
        let o = run(&args, p, None);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn calibration_without_iterations_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[calibration]\nmax_iter = 0\n").unwrap();
    let o = run(
        &[
            "--config", "c.toml", "calibrate", "--x", &shipped("x90.json"), "--y", &shipped("y90m.json"),
            "--mechanism", "offsets", "--bin", "0.04:0.06", "--out", "cal.json",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("cal.json"));
    assert_eq!(v["converged"], false);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("s.toml"), "seed = 3\n").unwrap();
    let x = shipped("x90.json");
    let seed_of = |args: &[&str], env: Option<&str>| {
        let o = run(args, p, env);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        json(&p.join("e.json.manifest.json"))["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&["--config", "s.toml", "evaluate", &x, "--out", "e.json"], None), 3);
    assert_eq!(seed_of(&["--config", "s.toml", "evaluate", &x, "--out", "e.json"], Some("7")), 7);
    assert_eq!(seed_of(&["--config", "s.toml", "--seed", "9", "evaluate", &x, "--out", "e.json"], Some("7")), 9);
    assert_eq!(seed_of(&["evaluate", &x, "--out", "e.json"], None), 42);
}

#[test]
fn filterfn_rows_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let x = shipped("x90.json");
    let o = run(&["filterfn", &x, "--points", "1", "--out", "one.csv"], p, None);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(p.join("one.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "f_hz,F");
    assert_eq!(lines.len(), 2);
    let o = run(&["filterfn", &x, "--points", "20", "--out", "many.csv"], p, None);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(p.join("many.csv")).unwrap().lines().count(), 21);
    let o = run(&["filterfn", &x, "--fmin", "1e9", "--fmax", "1e6", "--out", "bad.csv"], p, None);
    assert_eq!(code(&o), 1);
    assert!(!p.join("bad.csv").exists());
}

#[test]
fn bench_calibration_writes_one_row_per_bin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "bench-calibration", "--x", &shipped("x90.json"), "--y", &shipped("y90m.json"), "--runs", "1",
            "--bins", "0:0.02:4", "--mechanism", "offsets", "--out", "b",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("b/bench_eps_offsets.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin_lo,bin_hi,success_rate,median_iters,In_p10,In_p50,In_p90");
    assert_eq!(lines.len(), 5);
    assert!(dir.path().join("b/manifest.json").exists());
}

#[test]
fn wait_pulse_evaluates_to_identity() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = json(Path::new(&shipped("x90.json")));
    let n = doc["eps_uV"].as_array().unwrap().len();
    doc["eps_uV"] = vec![-1250.0; n].into();
    std::fs::write(dir.path().join("wait.json"), doc.to_string()).unwrap();
    let o = run(&["evaluate", "wait.json", "--out", "r.json"], dir.path(), None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // 2π·n_dbz about the x-axis, which is the identity in canonical form
    let v = json(&dir.path().join("r.json"));
    assert!(v["angle"].as_f64().unwrap() < 1e-9, "{}", v["angle"]);
}
