use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn conelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conelab"))
        .args(args)
        .env_remove("CONELAB_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conelab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn protocol_threshold_for_octonions() {
    let v = json(&conelab(&["protocol", "--alg1", "R", "--alg2", "O", "--threshold"]));
    assert_eq!(v["command"], "protocol");
    assert!((v["results"]["threshold"].as_f64().unwrap() - 0.125).abs() < 1e-9);
    assert_eq!(v["results"]["N"], 8);
}

#[test]
fn protocol_iteration_trajectory() {
    let v = json(&conelab(&["protocol", "--alg1", "Csplit", "--alg2", "H", "--iterate", "0.1", "5"]));
    let t = v["results"]["trajectory"].as_array().unwrap();
    assert_eq!(t.len(), 6);
    assert!((t[1].as_f64().unwrap() - 0.36 / 5.05).abs() < 1e-9);
}

#[test]
fn witness_tensor_report() {
    let v = json(&conelab(&["witness", "--n", "2", "--k", "2"]));
    assert_eq!(v["results"]["sq_norm"], 2.0);
    assert_eq!(v["results"]["N"], 2);
}

#[test]
fn quick_suite_subset_passes() {
    let out = conelab(&["suite", "--quick", "--only", "1,2,3"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.matches("[PASS]").count(), 3, "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(conelab(&["protocol", "--bogus"]).status.code(), Some(2));
    assert_eq!(conelab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(conelab(&["protocol", "--alg1", "H", "--alg2", "O", "--threshold"]).status.code(), Some(2));
    assert_eq!(conelab(&["certify", "--check", "/nonexistent/cert.json"]).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let args = ["witness", "--n", "3", "--k", "2", "--pair"];
    assert_eq!(conelab(&args).stdout, conelab(&args).stdout);
    let args = ["--seed", "7", "tau", "--space", "l2", "--dim", "2", "--kmax", "3"];
    assert_eq!(conelab(&args).stdout, conelab(&args).stdout);
}

#[test]
fn seed_flag_beats_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_conelab"))
        .args(["--seed", "5", "witness", "--n", "2", "--k", "2"])
        .env("CONELAB_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 5);
    let out = Command::new(env!("CARGO_BIN_EXE_conelab"))
        .args(["witness", "--n", "2", "--k", "2"])
        .env("CONELAB_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 9);
}

#[test]
fn certificate_round_trip_and_tampering() {
    let path = scratch("cert.json");
    let p = path.to_str().unwrap();
    let out = conelab(&["certify", "--n", "2", "--k", "2", "--out", p]);
    assert!(out.status.success());
    let check = json(&conelab(&["certify", "--check", p]));
    assert_eq!(check["results"][0]["valid"], true);

    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    report["certificates"][0]["payload"]["map"]["matrix"][0][0] = 5.0.into();
    let bad = scratch("tampered.json");
    std::fs::write(&bad, serde_json::to_vec(&report).unwrap()).unwrap();
    let out = conelab(&["certify", "--check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
