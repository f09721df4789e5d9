use std::fs;

use hapto_fv::cli_io::{build_initial_state, read_series, read_snapshot, write_series, write_snapshot, RunConfig};
use hapto_fv::discretization::Grid;
use hapto_fv::stepper::{run, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(grid: Grid, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = State::uniform(grid, 0.0, 0.0, 0.0, 0.0);
    for f in [&mut s.c1, &mut s.c2, &mut s.h, &mut s.tau] {
        for v in f.values_mut() {
            *v = rng.gen::<f64>() * 10f64.powi(rng.gen_range(-30..30));
        }
    }
    s.t = rng.gen();
    s
}

#[test]
fn demo_series_has_101_rows_and_round_trips() {
    let cfg = RunConfig::default();
    let s0 = build_initial_state(&cfg).unwrap();
    let out = run(&cfg.params, &cfg.regularization().unwrap(), &s0, &cfg.step, &cfg.monitor_config()).unwrap();
    assert!(out.hard_failures.is_empty(), "{:?}", out.hard_failures);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    write_series(&out.reports, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 102);
    let back = read_series(&path).unwrap();
    assert_eq!(back.len(), 101);
    for (a, b) in back.iter().zip(&out.reports) {
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.entropy_f.to_bits(), b.entropy_f.to_bits());
    }
}

#[test]
fn single_report_series_is_two_lines() {
    let cfg = RunConfig {
        cells: [16, 16],
        ..RunConfig::default()
    };
    let mut step = cfg.step;
    step.t_end = 0.005;
    let s0 = build_initial_state(&cfg).unwrap();
    let out = run(&cfg.params, &cfg.regularization().unwrap(), &s0, &step, &cfg.monitor_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    // Reports at t = 0 and at t_end.
    write_series(&out.reports[..1], &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);
    assert!(write_series(&[], &path).is_err());
}

#[test]
fn snapshots_round_trip_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    for (i, grid) in [Grid::line(33, 2.0).unwrap(), Grid::rect(7, 11, 1.0, 0.5).unwrap()].into_iter().enumerate() {
        let s = random_state(grid, i as u64);
        let raw = dir.path().join("s.bin");
        write_snapshot(&s, &raw).unwrap();
        assert_eq!(read_snapshot(&raw).unwrap(), s);

        let csv = dir.path().join("s.csv");
        write_snapshot(&s, &csv).unwrap();
        let back = read_snapshot(&csv).unwrap();
        for ((_, a), (_, b)) in back.fields().iter().zip(s.fields()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!(x.to_bits().abs_diff(y.to_bits()) <= 1);
            }
        }
    }
}

#[test]
fn monitored_quantities_survive_a_raw_round_trip() {
    let cfg = RunConfig::default();
    let mut step = cfg.step;
    step.t_end = 0.3;
    let reg = cfg.regularization().unwrap();
    let s0 = build_initial_state(&cfg).unwrap();
    let out = run(&cfg.params, &reg, &s0, &step, &cfg.monitor_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("final.bin");
    write_snapshot(&out.state, &path).unwrap();
    let back = read_snapshot(&path).unwrap();
    let m = out.reports.last().unwrap().m_h;
    let floor = cfg.step.floor;
    let f = |s: &State| hapto_fv::monitors::entropy_functional(&cfg.params, s, m, floor).unwrap();
    assert_eq!(f(&back).to_bits(), f(&out.state).to_bits());
}

#[test]
fn truncated_raw_snapshot_names_the_section() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    write_snapshot(&random_state(Grid::line(5, 1.0).unwrap(), 9), &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..8 + 48]).unwrap();
    let msg = read_snapshot(&path).unwrap_err().to_string();
    assert!(msg.contains("c1"), "{msg}");
    fs::write(&path, &bytes[..20]).unwrap();
    let msg = read_snapshot(&path).unwrap_err().to_string();
    assert!(msg.contains("header"), "{msg}");
}
