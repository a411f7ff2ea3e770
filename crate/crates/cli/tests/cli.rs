use std::process::{Command, Output};

use serde_json::Value;

fn powinst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powinst"))
        .args(args)
        .env_remove("POWINST_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn example25_npis_passes() {
    let out = powinst(&[
        "verify",
        "--example",
        "example25",
        "--param",
        "b=2",
        "--param",
        "c=2",
        "--cert",
        "npis:N=geometric(2),r=0.25",
        "--window",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "PASS");
    assert_eq!(doc["window"], 40);
    assert!(doc["inputs"]["system"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn example29_with_quadratic_growth_fails_at_first_step() {
    let out = powinst(&[
        "verify",
        "--example",
        "example29",
        "--cert",
        "npis:N=exp_quadratic(1),r=0.13533528",
        "--window",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "FAIL");
    let w = &doc["witness"];
    assert_eq!((w["m"].as_u64(), w["n"].as_u64(), w["p"].as_u64()), (Some(1), Some(0), Some(0)));
}

#[test]
fn constant_system_upis_estimate() {
    let out = powinst(&[
        "estimate", "--example", "constant", "--param", "c=2", "--kind", "upis", "--window",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["status"], "feasible");
    assert_eq!(doc["certificate"]["kind"], "upis");
    assert_eq!(doc["certificate"]["N"], "1.0");
    assert_eq!(doc["certificate"]["r"], "0.5");
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let base = [
        "refute", "--example", "example25", "--param", "b=2", "--param", "c=1", "--window", "40",
    ];
    let first = powinst(&base);
    let mut more = base.to_vec();
    more.extend(["--threads", "1"]);
    let second = powinst(&more);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn malformed_input_exits_two() {
    for args in [
        &["verify", "--example", "example99", "--cert", "upis:N=1,r=0.5"][..],
        &["verify", "--example", "identity", "--cert", "upis:N=0.5,r=0.5"],
        &["verify", "--example", "identity", "--cert", "upis:N=1"],
        &["estimate", "--example", "identity", "--kind", "npis"],
        &["verify", "--example", "identity", "--cert", "/no/such/file.json"],
    ] {
        let out = powinst(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error"));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn system_and_certificate_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = powinst(&["catalog", "--example", "constant", "--param", "c=2", "--window", "15"]);
    assert_eq!(spec.status.code(), Some(0));
    let spec_path = dir.path().join("system.json");
    std::fs::write(&spec_path, &spec.stdout).unwrap();
    let cert_path = dir.path().join("cert.json");
    std::fs::write(&cert_path, r#"{"kind":"upis","N":"1.0","r":"0.5"}"#).unwrap();
    let out = powinst(&[
        "verify",
        "--system",
        spec_path.to_str().unwrap(),
        "--cert",
        cert_path.to_str().unwrap(),
        "--window",
        "15",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("upis,PASS,15,"));
}

#[test]
fn lyapunov_export_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.csv");
    let out = powinst(&[
        "lyapunov",
        "--example",
        "example25",
        "--param",
        "b=2",
        "--param",
        "c=2",
        "--from-npis",
        "npis:N=geometric(2),r=0.25",
        "--window",
        "8",
        "--export",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "PASS");
    let table = std::fs::read_to_string(&path).unwrap();
    assert!(table.starts_with("m,n,vector_id,log_value"));
    // one row per (m, n) pair with n <= m
    assert_eq!(table.lines().count(), 1 + 9 * 10 / 2);
}
