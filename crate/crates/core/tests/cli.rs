use std::fs;
use std::path::Path;
use std::process::Command;

use hapto_fv::cli_io::{cli_main, read_series, read_snapshot};

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["hapto-fv"];
    full.extend_from_slice(args);
    cli_main(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_config_accepts_demo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("demo.cfg");
    fs::write(&cfg, "# demo\nmodel.a1 = 0.05\n").unwrap();
    assert_eq!(cli(&["validate-config", s(&cfg)]), 0);
}

#[test]
fn negative_mu_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model.mu = -1\n").unwrap();
    let series = dir.path().join("series.csv");
    assert_eq!(cli(&["simulate", s(&cfg), "--series", s(&series)]), 1);
    assert!(!series.exists());
    assert_eq!(cli(&["validate-config", s(&cfg)]), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&[]), 1);
    assert_eq!(cli(&["validate-config", "/nonexistent/path.cfg"]), 1);
    assert_eq!(cli(&["validate-config", "--set", "no_equals_sign"]), 1);
}

#[test]
fn simulate_writes_series_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("demo.cfg");
    fs::write(&cfg, "grid.nx = 64\nstep.t_end = 0.2\n").unwrap();
    let series = dir.path().join("series.csv");
    let snap = dir.path().join("final.bin");
    assert_eq!(cli(&["simulate", s(&cfg), "--series", s(&series), "--snapshot", s(&snap)]), 0);
    let reports = read_series(&series).unwrap();
    assert_eq!(reports.len(), 21);
    assert!(reports.iter().all(|r| r.flags.all_pass() || !r.flags.ledger));
    let state = read_snapshot(&snap).unwrap();
    assert_eq!(state.t, 0.2);
    assert_eq!(state.grid().nx(), 64);
}

#[test]
fn hard_monitor_failure_exits_two() {
    // A zero-slack ledger check is configured hard and cannot hold.
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let snap = dir.path().join("final.bin");
    let code = cli(&[
        "simulate",
        "--set",
        "grid.nx=32",
        "--set",
        "step.t_end=0.05",
        "--set",
        "monitor.hard=ledger",
        "--set",
        "monitor.ledger_factor=1e-12",
        "--series",
        s(&series),
        "--snapshot",
        s(&snap),
    ]);
    assert_eq!(code, 2);
    assert!(series.exists() && snap.exists());
}

#[test]
fn other_subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sw");
    let common = ["--set", "grid.nx=32", "--set", "step.t_end=0.1", "--set", "analysis.saves=10"];
    let mut args = vec!["sweep"];
    args.extend_from_slice(&common);
    args.extend_from_slice(&["--output", s(&prefix)]);
    assert_eq!(cli(&args), 0);
    let pairwise = fs::read_to_string(dir.path().join("sw_pairwise.csv")).unwrap();
    assert_eq!(pairwise.lines().count(), 4);
    let residuals = fs::read_to_string(dir.path().join("sw_residuals.csv")).unwrap();
    assert_eq!(residuals.lines().count(), 1 + 4 * 3 * 4);

    let weak = dir.path().join("weak.csv");
    let mut args = vec!["weakcheck"];
    args.extend_from_slice(&common);
    args.extend_from_slice(&["--output", s(&weak)]);
    assert_eq!(cli(&args), 0);
    assert_eq!(fs::read_to_string(&weak).unwrap().lines().count(), 13);

    let strict = dir.path().join("strict.csv");
    args.pop();
    args.push(s(&strict));
    args.push("--strict-defeq4");
    assert_eq!(cli(&args), 0);
    let tau_residual = |path: &Path| -> f64 {
        let text = fs::read_to_string(path).unwrap();
        let line = text.lines().find(|l| l.starts_with("0,tau,")).unwrap().to_string();
        line.split(',').nth(5).unwrap().parse().unwrap()
    };
    assert!(tau_residual(&strict).abs() > 10.0 * tau_residual(&weak).abs());

    let conv = dir.path().join("conv.csv");
    assert_eq!(cli(&["convergence", "--set", "convergence.case=constant", "--output", s(&conv)]), 0);
    assert_eq!(fs::read_to_string(&conv).unwrap().lines().count(), 5);
}

#[test]
fn binary_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("demo.cfg");
    fs::write(&cfg, "step.t_end = 0.1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hapto-fv"))
        .current_dir(dir.path())
        .args(["simulate", "demo.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("series.csv").exists());
    assert!(dir.path().join("final.bin").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_hapto-fv"))
        .args(["simulate", "--set", "model.mu=-1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("strictly positive"));
}
