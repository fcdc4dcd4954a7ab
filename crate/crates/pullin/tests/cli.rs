use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn pullin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pullin"))
        .current_dir(dir)
        .env("PULLIN_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const INTERVAL: &str = r#"{"grid": {"kind": "interval", "m": 129}}"#;

#[test]
fn branch_brackets_the_interval_threshold() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"grid": {"kind": "interval", "m": 513}, "advection": {"components": ["0"]}}"#,
    );
    let o = pullin(
        tmp.path(),
        &["branch", "--config", cfg.to_str().unwrap(), "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let star = read_json(&tmp.path().join("out/lambda_star.json"));
    let value = star["value"].as_f64().unwrap();
    let width = star["width"].as_f64().unwrap();
    assert!(width <= 1e-6 * value, "width {width} at λ* = {value}");
    assert!((value - 1.4).abs() < 0.01);
    let csv = fs::read_to_string(tmp.path().join("out/branch.csv")).unwrap();
    assert!(csv.starts_with("# config-sha256:"));
    assert_eq!(star["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_without_drift_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &["verify", "--config", cfg.to_str().unwrap(), "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(&tmp.path().join("out/summary.json"));
    assert_eq!(summary["passed"], Value::Bool(true));
}

#[test]
fn unknown_command_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(tmp.path(), &["explode", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("possible values: decompose"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn minimal_config_gets_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &["solve", "--config", cfg.to_str().unwrap(), "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resolved = read_json(&tmp.path().join("out/resolved-config.json"));
    assert_eq!(resolved["solver"]["newton_tol"].as_f64(), Some(1e-10));
    assert_eq!(resolved["spectral"]["eig_tol"].as_f64(), Some(1e-8));
    assert_eq!(resolved["verify"]["seed"].as_u64(), Some(42));
    assert_eq!(resolved["advection"]["components"][0], "0");
}

#[test]
fn beta_outside_range_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "verify.beta=[2.5]",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("verify.beta"), "{}", stderr(&o));
}

#[test]
fn y_on_an_interval_names_the_component() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"grid": {"kind": "interval", "m": 65}, "advection": {"components": ["sin(pi*y)"]}}"#,
    );
    let o = pullin(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("advection.components[0]"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn syntax_errors_report_the_position() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "{\"grid\": {\"kind\": \"interval\",\n \"m\": }}",
    );
    let o = pullin(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.json:2:"), "{}", stderr(&o));
}

#[test]
fn oracle_rejects_rectangles() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"grid": {"kind": "rectangle", "m": 17}}"#);
    let o = pullin(tmp.path(), &["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.kind"), "{}", stderr(&o));
}

#[test]
fn solve_past_the_fold_fails_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "solver.lambda=2",
            "--out",
            "out",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn seed_flag_reaches_the_resolved_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            "out",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resolved = read_json(&tmp.path().join("out/resolved-config.json"));
    assert_eq!(resolved["verify"]["seed"].as_u64(), Some(7));
}

#[test]
fn zero_threads_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = Command::new(env!("CARGO_BIN_EXE_pullin"))
        .current_dir(tmp.path())
        .env("PULLIN_THREADS", "0")
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("PULLIN_THREADS"), "{}", stderr(&o));
}

#[test]
fn json_only_output_writes_no_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), INTERVAL);
    let o = pullin(
        tmp.path(),
        &[
            "eigen",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            r#"output.formats=["json"]"#,
            "--out",
            "out",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    assert!(out.join("eigen.json").exists());
    assert!(!out.join("phi.csv").exists());
}
