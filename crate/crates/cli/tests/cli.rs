use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vdwlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdwlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("VDWLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn two_level_pair_gives_a1_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdwlab(dir.path(), &["vdw-c6", "--model", "two-level", "--gap", "1.0", "--dipole", "1.0", "--e2", "1.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "vdw-c6");
    approx::assert_relative_eq!(s["results"]["a1"].as_f64().unwrap(), 2.0, max_relative = 1e-12);
    assert_eq!(s["rng_seed"], 20240611);
    assert_eq!(s["config"]["gap"], 1.0);
    assert!(dir.path().join("vdw-c6.csv").exists());
}

#[test]
fn single_remainder_order_has_slope_minus_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdwlab(dir.path(), &["verify-multipole", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "verify-multipole");
    let remainders = s["results"]["remainders"].as_array().unwrap();
    assert_eq!(remainders.len(), 1);
    let slope = remainders[0]["slope"].as_f64().unwrap();
    assert!((slope + 5.0).abs() <= 0.05, "slope {slope}");
}

#[test]
fn missing_or_unknown_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = vdwlab(dir.path(), &[]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("Usage"));
    assert_eq!(vdwlab(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(vdwlab(dir.path(), &["vdw-c6", "--gap", "-1"]).status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"gapp": 1.0}"#).unwrap();
    let out = vdwlab(dir.path(), &["vdw-c6", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["category"], "usage");

    let threads = Command::new(env!("CARGO_BIN_EXE_vdwlab"))
        .args(["vdw-c6", "--model", "two-level"])
        .current_dir(dir.path())
        .env("VDWLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"model": "two-level", "gap": 2.0, "dipole": 1.0, "name": "pair", "rng_seed": 7}"#,
    )
    .unwrap();
    let out = vdwlab(dir.path(), &["vdw-c6", "--config", "c.json", "--gap", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "pair");
    assert_eq!(s["config"]["gap"], 1.0);
    assert_eq!(s["rng_seed"], 7);
    approx::assert_relative_eq!(s["results"]["a1"].as_f64().unwrap(), 2.0, max_relative = 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["vdw-c9", "--n-keep", "0"];
    assert_eq!(vdwlab(dir.path(), &args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("vdw-c9.summary.json")).unwrap();
    assert_eq!(vdwlab(dir.path(), &args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("vdw-c9.summary.json")).unwrap());
}

#[test]
fn atom_solve_dumps_eigenvectors() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdwlab(
        dir.path(),
        &["atom-solve", "--points", "128", "--box-length", "40", "--n-states", "2", "--dump", "true"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "atom-solve");
    assert_eq!(s["passed"], true);
    let energies = s["results"]["energies"].as_array().unwrap();
    assert!(energies[0].as_f64().unwrap() < energies[1].as_f64().unwrap());
    for i in 0..2 {
        let dump = std::fs::read(dir.path().join(format!("atom-solve.state{i}.wf"))).unwrap();
        assert!(dump.starts_with(b"vdwlab-wf v1 dim=1 n=128"));
    }
}
