use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn mirrorcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirrorcert")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_exits_zero_when_certificate_holds() {
    let out = mirrorcert(&["certify", path_str(&problem("maxquad_2d.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["certificate"]["holds"], Value::Bool(true));
}

#[test]
fn understated_delta_exits_one() {
    let path = problem("countable_kinks.json");
    let ok = mirrorcert(&["interp-check", path_str(&path), "--segments", "300"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = mirrorcert(&["interp-check", path_str(&path), "--segments", "300", "--declared-delta", "0.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn missing_file_exits_two_with_json_error() {
    let out = mirrorcert(&["solve", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn malformed_problem_reports_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"objective\": { \"type\": \"countable_kinks\", \"k\": \"one\", \"delta\": 1.0 }\n}\n")
        .unwrap();
    let out = mirrorcert(&["solve", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["field"].as_str().unwrap().starts_with("objective"));
}

#[test]
fn non_psd_piece_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nonpsd.json");
    std::fs::write(
        &path,
        r#"{"objective": {"type": "maxquad", "pieces": [
            {"a": [[1.0, 0.0], [0.0, 1.0]], "b": [0.0, 0.0]},
            {"a": [[1.0, 0.0], [0.0, -1.0]], "b": [0.0, 0.0]}]},
          "prox": {"kind": "euclidean", "set": {"type": "ball", "center": [0.0, 0.0], "radius": 1.0}},
          "theta0": 1.0}"#,
    )
    .unwrap();
    let out = mirrorcert(&["solve", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["description"].as_str().unwrap().contains("piece 1"), "{err}");
}

#[test]
fn csv_and_json_step_logs_agree() {
    let path = problem("simplex_entropy.json");
    let json = mirrorcert(&["solve", path_str(&path)]);
    let csv_out = mirrorcert(&["solve", path_str(&path), "--format", "csv"]);
    assert_eq!(json.status.code(), Some(0));
    assert_eq!(csv_out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&json.stdout).unwrap();
    let steps = report["steps"].as_array().unwrap();
    let mut reader = csv::Reader::from_reader(csv_out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), steps.len());
    for (row, step) in rows.iter().zip(steps) {
        for column in ["step_size", "subgradient_dual_norm", "objective_value", "max_constraint_value"] {
            let idx = headers.iter().position(|h| h == column).unwrap();
            let from_csv: f64 = row[idx].parse().unwrap();
            let from_json = step[column].as_f64().unwrap();
            assert!((from_csv - from_json).abs() <= 1e-15 * (1.0 + from_json.abs()), "{column}");
        }
    }
}

#[test]
fn out_flag_writes_file_and_keeps_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bench.csv");
    let out = mirrorcert(&[
        "bench",
        path_str(&problem("one_dim.json")),
        "--epsilons",
        "0.2,0.1",
        "--format",
        "csv",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
}
