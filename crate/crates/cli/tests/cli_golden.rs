mod common;

use common::{check_golden, fixture, run, run_pipeline};
use serde_json::Value;

fn stdout_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_failure(args: &[&str], exit: i32) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(exit), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn pipeline_matches_golden_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = run_pipeline(dir.path(), &[]).unwrap();
    check_golden(&outputs).unwrap();
}

#[test]
fn sequential_pipeline_is_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let par = run_pipeline(a.path(), &[]).unwrap();
    let seq = run_pipeline(b.path(), &["--sequential"]).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn pipeline_detects_and_undoes_the_flip() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = run_pipeline(dir.path(), &[]).unwrap();
    let det: Value = serde_json::from_slice(&outputs[3].1).unwrap();
    assert_eq!(det["detected"], serde_json::json!({ "site": 1, "axis": "X" }));
    assert_eq!(det["ambiguous"], false);
    let fixed: Value = serde_json::from_slice(&outputs[4].1).unwrap();
    assert!(fixed["fidelity"].as_f64().unwrap() > 1.0 - 1e-10);
}

#[test]
fn decompose_spin_up() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("up.json");
    std::fs::write(
        &path,
        r#"{"system":[1],"matrix":[[{"re":1,"im":0},{"re":0,"im":0}],[{"re":0,"im":0},{"re":0,"im":0}]]}"#,
    )
    .unwrap();
    let doc = stdout_json(&["decompose", path.to_str().unwrap()]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for e in doc["entries"].as_array().unwrap() {
        let idx: Vec<i64> = e["index"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
        let want = if idx[1] == 0 { h } else { 0.0 };
        assert!((e["re"].as_f64().unwrap() - want).abs() < 1e-15, "{idx:?}");
        assert_eq!(e["im"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn detect_on_the_reference_reports_none() {
    let r = fixture("two_qubit_ref.json");
    let doc = stdout_json(&["detect", r.to_str().unwrap(), r.to_str().unwrap()]);
    assert_eq!(doc["detected"], "none");
    assert_eq!(doc["residual"].as_f64().unwrap(), 0.0);
}

#[test]
fn spectrum_of_the_two_spin_chain() {
    let doc = stdout_json(&["spectrum", fixture("h2_chain.json").to_str().unwrap()]);
    let vals: Vec<f64> = doc["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in vals.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
        assert!((a - b).abs() < 1e-10, "{vals:?}");
    }
}

#[test]
fn multipole_report_converges_outside_sources() {
    let doc = stdout_json(&["multipole", fixture("sources.json").to_str().unwrap(), "--lmax", "8", "--r0", "8"]);
    assert!(doc["rel_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(doc["kind"], "electric");
    assert!(doc.get("warning").is_none());
}

#[test]
fn access_counts_for_three_qubits() {
    let doc = stdout_json(&["access", "--n", "3"]);
    assert_eq!(doc["observable_coefficients"], 57);
    assert_eq!(doc["total_coefficients"], 64);
    assert_eq!(doc["unobservable"], serde_json::json!([3]));
}

#[test]
fn failures_are_json_on_stderr() {
    let err = stderr_failure(&["decompose", "/nonexistent/state.json"], 2);
    assert_eq!(err["code"], "io");
    assert_eq!(err["context"]["path"], "/nonexistent/state.json");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"system\": [1,\n").unwrap();
    let err = stderr_failure(&["validate", bad.to_str().unwrap()], 2);
    assert_eq!(err["code"], "parse");
    assert!(err["context"]["line"].as_u64().unwrap() >= 2);

    let err = stderr_failure(&["no-such-command"], 2);
    assert_eq!(err["code"], "usage");

    let err = stderr_failure(&["inject", fixture("two_qubit_ref.json").to_str().unwrap(), "--error", "X7"], 2);
    assert_eq!(err["code"], "invalid_argument");

    let err = stderr_failure(&["basis", "--spin", "1/3"], 2);
    assert_eq!(err["code"], "invalid_argument");
}

#[test]
fn invalid_state_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(
        &path,
        r#"{"system":[1],"matrix":[[{"re":1.5,"im":0},{"re":0,"im":0}],[{"re":0,"im":0},{"re":-0.5,"im":0}]]}"#,
    )
    .unwrap();
    let err = stderr_failure(&["decompose", path.to_str().unwrap()], 2);
    assert_eq!(err["code"], "invalid_state");
}

#[test]
fn tolerance_variable_must_be_positive() {
    let out = std::process::Command::new(common::BIN)
        .args(["access", "--n", "2"])
        .env("SPINTOMO_VALIDITY_TOL", "-1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "usage");
}
