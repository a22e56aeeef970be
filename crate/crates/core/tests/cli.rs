use std::fs;
use std::process::Command;

use sis_tem::cli::run;
use sis_tem::harness::report::{Summary, TRAJECTORY_HEADER};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["sis-tem"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn params_small_noise() {
    let (code, out, _) = invoke(&["params"]);
    assert_eq!(code, 0);
    assert!(out.contains("regime = ExtinctSmallNoise"), "{out}");
    assert!(out.contains("R0_stoch = 0.975000"), "{out}");
    assert!(out.contains("delta_star = "), "{out}");
}

#[test]
fn params_other_presets() {
    let (code, out, _) = invoke(&["params", "--preset", "weak-noise"]);
    assert_eq!(code, 0);
    assert!(out.contains("regime = Unclassified"));
    let (_, out, _) = invoke(&["params", "--sigma", "0.08"]);
    assert!(out.contains("regime = ExtinctLargeNoise"));
    assert!(out.contains("ext_bound_b = -25.468750"), "{out}");
    assert!(out.contains("delta_star_star = "));
}

#[test]
fn invalid_input_exits_2() {
    let (code, _, err) = invoke(&["params", "--beta", "-0.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("beta must be >= 0"), "{err}");
    assert_eq!(invoke(&["params", "--i0", "100"]).0, 2);
    assert_eq!(invoke(&["simulate", "--scheme", "rk4"]).0, 2);
    assert_eq!(invoke(&["converge", "--scale", "huge"]).0, 2);
    assert_eq!(invoke(&["extinct", "--scheme", "em"]).0, 2);
    assert_eq!(invoke(&["frobnicate"]).0, 2);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sis-tem");
    let ok = Command::new(bin).arg("params").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["params", "--beta", "-1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_csv_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = invoke(&[
        "simulate", "--paths", "3", "--horizon", "1", "--step-exponent", "4", "--out", out, "--seed", "7",
        "--dump-increments", "true",
    ]);
    assert_eq!(code, 0, "{err}");
    let csvs: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 3);
    let text = fs::read_to_string(dir.path().join("path_00000.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 17);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert!((rows[0][2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    for r in &rows {
        let i: f64 = r[2].parse().unwrap();
        assert!(i > 0.0 && i < 100.0);
        assert!(r[3] == "0" || r[3] == "1");
    }
    let grid = sis_tem::paths::read_dump(fs::File::open(dir.path().join("path_00000.bin")).unwrap()).unwrap();
    assert_eq!((grid.seed, grid.path_index, grid.fine_exponent), (7, 0, 4));
    assert_eq!(grid.increments.len(), 16);

    // same seed → same bytes
    let dir2 = tempfile::tempdir().unwrap();
    invoke(&["simulate", "--paths", "3", "--horizon", "1", "--step-exponent", "4", "--out", dir2.path().to_str().unwrap(), "--seed", "7"]);
    assert_eq!(text, fs::read_to_string(dir2.path().join("path_00000.csv")).unwrap());
}

#[test]
fn simulate_classical_scheme_leaves_y_empty() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = invoke(&[
        "simulate", "--scheme", "em", "--paths", "2", "--horizon", "1", "--dt", "0.25", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("wrote 2 trajectories (em, 4 steps)"), "{out}");
    let text = fs::read_to_string(dir.path().join("path_00001.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "");
}

#[test]
fn converge_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke(&[
        "converge", "--paths", "20", "--step-exponents", "4,5,6", "--reference-exponent", "9", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("step_exponent,dt,error"));
    let json = fs::read_to_string(dir.path().join("convergence_summary.json")).unwrap();
    let s = Summary::from_json(&json).unwrap();
    assert_eq!(s.errors.len(), 3);
    assert!(s.slope.is_some());
    assert!(s.runtime_seconds >= 0.0);
    assert_eq!(Summary::from_json(&s.to_json().unwrap()).unwrap(), s);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["slope", "errors", "bound", "h", "regime", "runtime_seconds"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn converge_with_unfittable_slope_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = invoke(&[
        "converge", "--paths", "2", "--step-exponents", "5", "--reference-exponent", "7", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    let json = fs::read_to_string(dir.path().join("convergence_summary.json")).unwrap();
    assert!(Summary::from_json(&json).unwrap().slope.is_none());
}

#[test]
fn extinct_outputs_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"preset": "large-noise", "paths": 5, "horizon": 5.0, "seed": 3, "h_form": "printed"}"#).unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = invoke(&[
        "extinct", "--config", cfg.to_str().unwrap(), "--paths", "7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("ExtinctLargeNoise"));
    let csv = fs::read_to_string(out.join("extinction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    let s = Summary::from_json(&fs::read_to_string(out.join("extinction_summary.json")).unwrap()).unwrap();
    assert_eq!(s.m_paths, 7);
    assert_eq!(s.seed, 3);
    assert_eq!(s.h_form.as_deref(), Some("printed"));
    assert!(s.bound.is_some() && s.h.is_some());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"betta": 0.5}"#).unwrap();
    assert_eq!(invoke(&["params", "--config", cfg.to_str().unwrap()]).0, 2);
    assert_eq!(invoke(&["params", "--config", "/nonexistent/run.json"]).0, 3);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let (code, _, _) = invoke(&["extinct", "--paths", "2", "--horizon", "1", "--out", file.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn tampered_summary_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    invoke(&["extinct", "--paths", "2", "--horizon", "1", "--out", dir.path().to_str().unwrap()]);
    let json = fs::read_to_string(dir.path().join("extinction_summary.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["fraction_below_threshold"] = serde_json::json!(1.5);
    assert!(Summary::from_json(&v.to_string()).is_err());
}
