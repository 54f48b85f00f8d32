// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end runs of the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memchange"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should run")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout should be JSON")
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn simulate_then_estimate_recovers_d() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    let out = run(&[
        "simulate", "--family", "farima00", "--d", "0.4", "--n", "1000", "--seed", "7",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let est = stdout_json(&run(&["estimate-d", "--input", csv.to_str().unwrap()]));
    let d_hat = est["d_hat"].as_f64().unwrap();
    // Single-seed smoke bound: three times the documented RMSE scale.
    assert!((d_hat - 0.4).abs() < 0.15, "d_hat = {d_hat}");
}

#[test]
fn simulate_then_detect_known_k0() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    run(&[
        "simulate", "--family", "farima00", "--d", "0.4", "--n", "1000", "--seed", "7",
        "--out", csv.to_str().unwrap(),
    ]);
    let det = stdout_json(&run(&[
        "detect", "--input", csv.to_str().unwrap(), "--known-k", "0", "--step", "10",
    ]));
    let d_hat = det["dhats"][0].as_f64().unwrap();
    assert!((d_hat - 0.4).abs() < 0.15, "d_hat = {d_hat}");
    assert_eq!(det["k_hat"], 0);
    assert!(det["breakpoints"].as_array().unwrap().is_empty());
}

#[test]
fn detect_empty_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = tmp(&dir, "empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["detect", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("empty series"), "stderr: {stderr}");
    // The error record is machine readable.
    let record: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(record["error"], "data");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["detect", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emit_curve_has_header_and_kmax_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    run(&[
        "simulate", "--family", "farima00", "--d", "0.4", "--d", "0.1", "--taus", "0.5",
        "--n", "600", "--seed", "3", "--out", csv.to_str().unwrap(),
    ]);
    let curve = tmp(&dir, "curve.csv");
    let det = stdout_json(&run(&[
        "detect", "--input", csv.to_str().unwrap(), "--rule", "slope", "--step", "6",
        "--kmax", "6", "--emit-curve", curve.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&curve).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,contrast2,penalized2");
    assert_eq!(lines.len(), 1 + 7, "header plus kmax+1 rows");
    // First data row carries 2*C(0) and no penalty.
    let c0 = det["contrasts"][0].as_f64().unwrap();
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    let doubled: f64 = fields[1].parse().unwrap();
    assert!((doubled - 2.0 * c0).abs() < 1e-12);
    assert_eq!(fields[1], fields[2], "no penalty at K = 0");
}

#[test]
fn detect_reports_the_planted_change() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    run(&[
        "simulate", "--family", "farima00", "--d", "0.4", "--d", "0.1", "--taus", "0.5",
        "--n", "2000", "--seed", "11", "--out", csv.to_str().unwrap(),
    ]);
    let det = stdout_json(&run(&[
        "detect", "--input", csv.to_str().unwrap(), "--known-k", "1", "--step", "20",
    ]));
    let tau = det["taus"][0].as_f64().unwrap();
    assert!((tau - 0.5).abs() < 0.1, "tau = {tau}");
    let d1 = det["dhats"][0].as_f64().unwrap();
    let d2 = det["dhats"][1].as_f64().unwrap();
    assert!(d1 > d2, "memory should drop across the change: {d1} vs {d2}");
}

#[test]
fn dump_periodogram_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    run(&[
        "simulate", "--family", "classl", "--d", "0.3", "--n", "400", "--seed", "2",
        "--out", csv.to_str().unwrap(),
    ]);
    let pg = tmp(&dir, "pg.csv");
    run(&[
        "detect", "--input", csv.to_str().unwrap(), "--known-k", "0", "--step", "20",
        "--m", "30", "--dump-periodogram", pg.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&pg).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "j,lambda,periodogram");
    assert_eq!(lines.len(), 31, "header plus m rows");
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "1");
    let lambda: f64 = first[1].parse().unwrap();
    assert!((lambda - 2.0 * std::f64::consts::PI / 400.0).abs() < 1e-12);
}

#[test]
fn csv_and_json_outputs_agree_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = tmp(&dir, "x.csv");
    let json = tmp(&dir, "x.json");
    run(&[
        "simulate", "--family", "farima11", "--d", "0.2", "--psi", "-0.7", "--theta", "0.3",
        "--n", "128", "--seed", "9", "--out", csv.to_str().unwrap(),
        "--json", json.to_str().unwrap(),
    ]);
    let from_csv: Vec<f64> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let traj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let from_json: Vec<f64> = traj["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(from_csv, from_json);
    assert_eq!(traj["seed"], 9);
    assert_eq!(traj["spec"]["regimes"][0]["family"], "farima11");
}

#[test]
fn simulate_accepts_spec_file_with_mixed_families() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tmp(&dir, "spec.json");
    std::fs::write(
        &spec,
        r#"{"n":300,"taus":[0.4],"innovation":"uniform",
            "regimes":[{"family":"classl","d":0.35},{"family":"farima00","d":0.05}]}"#,
    )
    .unwrap();
    let csv = tmp(&dir, "x.csv");
    let out = run(&[
        "simulate", "--spec", spec.to_str().unwrap(), "--seed", "4",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let values: Vec<f64> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 300);
}

#[test]
fn montecarlo_runs_from_toml_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = tmp(&dir, "exp.toml");
    std::fs::write(
        &config,
        r#"
mode = "known-k"
reps = 4
seed0 = 21

[process]
n = 400
taus = [0.5]

[[process.regimes]]
family = "farima00"
d = 0.4

[[process.regimes]]
family = "farima00"
d = 0.1

[estimator]
step = 20
min_seg = 20
"#,
    )
    .unwrap();
    let out_dir_a = tmp(&dir, "a");
    let out_dir_b = tmp(&dir, "b");
    let first = run(&[
        "montecarlo", "--config", config.to_str().unwrap(),
        "--out-dir", out_dir_a.to_str().unwrap(),
    ]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = bin()
        .args([
            "montecarlo", "--config", config.to_str().unwrap(),
            "--out-dir", out_dir_b.to_str().unwrap(),
            "--threads", "1",
        ])
        .output()
        .unwrap();
    assert!(second.status.success());
    for name in ["table.md", "table.csv", "reps.csv"] {
        let a = std::fs::read_to_string(out_dir_a.join(name)).unwrap();
        let b = std::fs::read_to_string(out_dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} must not depend on thread count");
        assert!(!a.is_empty());
    }
    let table = std::fs::read_to_string(out_dir_a.join("table.csv")).unwrap();
    assert!(table.starts_with("parameter,truth,rmse"));
    assert_eq!(table.lines().count(), 1 + 3, "tau_1, d_1, d_2");
}

#[test]
fn montecarlo_json_config_and_reps_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = tmp(&dir, "exp.json");
    std::fs::write(
        &config,
        r#"{
          "mode": "unknown-k",
          "reps": 99,
          "seed0": 5,
          "process": {
            "n": 300,
            "taus": [0.5],
            "regimes": [{"family":"farima00","d":0.4},{"family":"farima00","d":0.1}]
          },
          "estimator": { "step": 25, "min_seg": 25 }
        }"#,
    )
    .unwrap();
    let out_dir = tmp(&dir, "out");
    let out = run(&[
        "montecarlo", "--config", config.to_str().unwrap(), "--reps", "3",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reps = std::fs::read_to_string(out_dir.join("reps.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 3, "header plus overridden reps");
    assert!(reps.starts_with("rep,seed,k_fixed,k_bic,k_slope,s_hat"));
}

#[test]
fn self_test_passes() {
    let out = run(&["self-test"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("self-test passed"));
    assert!(!stdout.contains("MISMATCH"));
}

#[test]
fn help_mentions_exit_codes_and_defaults() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("memchange"));
    let detect_help = run(&["detect", "--help"]);
    let text = String::from_utf8_lossy(&detect_help.stdout);
    for needle in ["floor(n^0.65)", "2/sqrt(n)", "max(1, n/1000)"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let _ = Path::new("unused");
}
