use std::path::Path;
use std::process::{Command, Output};

use phlab::report::ExperimentReport;
use phlab_cli::{run, ExperimentConfig};

fn phlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phlab")).args(args).env("PHLAB_THREADS", "2").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sphere_extract_h_recovers_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"model": {"id": "sphere", "n": 1}, "experiment": "extract-H", "radii": [0.2, 0.1, 0.05]}"#);
    let report = dir.path().join("out/report.json");
    let out = phlab(&["run", &cfg, "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = ExperimentReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((rep.value("extracted-h").unwrap() - 1.0).abs() < 5e-3);
    assert!(rep.timestamp.is_some());
    let rows = std::fs::read_to_string(report.with_extension("rows.csv")).unwrap();
    assert!(rows.starts_with("identity-id,"));
}

#[test]
fn heisenberg_identity_suite_passes() {
    let out = phlab(&["run", "--model", "heisenberg:n=1", "--experiment", "identity-suite"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rows pass"));
}

#[test]
fn unknown_model_names_valid_ids() {
    let out = phlab(&["run", "--model", "nosuch", "--experiment", "identity-suite"]);
    assert_ne!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    for id in ["heisenberg", "sphere", "quadric", "weighted-sphere", "conformal"] {
        assert!(err.contains(id), "{err}");
    }
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"model": "sphere""#);
    assert_eq!(phlab(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn catalogs_render_as_table_and_json() {
    let table = String::from_utf8(phlab(&["list", "models"]).stdout).unwrap();
    for id in ["heisenberg", "sphere", "quadric", "weighted-sphere", "conformal"] {
        assert!(table.contains(id));
    }
    let json: serde_json::Value = serde_json::from_slice(&phlab(&["list", "experiments", "--json"]).stdout).unwrap();
    let ids: Vec<&str> = json.as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(
        ids,
        ["identity-suite", "curvature-sweep", "circle-length", "extract-H", "reeb-expansion", "conformal", "immersion", "appendix-chain", "psh-checker"]
    );
}

#[test]
fn fixed_seed_gives_identical_reports() {
    let cfg = ExperimentConfig::from_json(r#"{"model": "weighted-sphere:weights=1;2", "experiment": "curvature-sweep", "seed": 11, "points": {"count": 3}}"#).unwrap();
    let a = run(&cfg).unwrap().report.to_json();
    let b = run(&cfg).unwrap().report.to_json();
    assert_eq!(a, b);
    let other = ExperimentConfig { seed: 12, ..cfg };
    assert_ne!(a, run(&other).unwrap().report.to_json());
}

#[test]
fn tolerance_overrides_change_verdicts_not_values() {
    let base = ExperimentConfig::from_json(r#"{"model": "sphere", "experiment": "curvature-sweep", "points": {"count": 2}}"#).unwrap();
    let strict = ExperimentConfig::from_json(r#"{"model": "sphere", "experiment": "curvature-sweep", "points": {"count": 2}, "tolerances": {"holomorphic-sectional": -1.0}}"#).unwrap();
    let a = run(&base).unwrap().report;
    let b = run(&strict).unwrap().report;
    assert!(a.all_pass() && !b.all_pass());
    let va: Vec<f64> = a.rows.iter().map(|r| r.value).collect();
    let vb: Vec<f64> = b.rows.iter().map(|r| r.value).collect();
    assert_eq!(va, vb);
}

#[test]
fn failing_rows_give_exit_one() {
    let out = phlab(&["run", "--model", "weighted-sphere", "--experiment", "curvature-sweep", "--points", "2"]);
    // No known constant: no rows, so the run passes.
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"model": "weighted-sphere", "experiment": "curvature-sweep", "expected": 1.0}"#);
    assert_eq!(phlab(&["run", &cfg, "--points", "2"]).status.code(), Some(1));
}

#[test]
fn circle_length_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("circle.json");
    let out = phlab(&["run", "--model", "heisenberg", "--experiment", "circle-length", "--radii", "0.1,0.05", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(report.with_extension("circle.csv")).unwrap();
    let line = table.lines().nth(1).unwrap();
    let length: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((length - 0.6291039).abs() < 5e-7);
}

#[test]
fn psh_checker_and_immersion_pass() {
    for (model, experiment) in [("heisenberg", "psh-checker"), ("heisenberg", "immersion"), ("sphere", "immersion"), ("quadric:sign=+", "appendix-chain")] {
        let cfg = ExperimentConfig::from_json(&format!(r#"{{"model": "{model}", "experiment": "{experiment}", "tuples": 4, "planes": 2}}"#)).unwrap();
        let rep = run(&cfg).unwrap().report;
        assert!(rep.all_pass() && !rep.rows.is_empty(), "{model} {experiment}:\n{}", rep.render_text());
    }
    let psh_on_sphere = ExperimentConfig::from_json(r#"{"model": "sphere", "experiment": "psh-checker"}"#).unwrap();
    assert!(run(&psh_on_sphere).is_err());
}
