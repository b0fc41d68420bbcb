use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn oksphere(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oksphere"))
        .args(args)
        .env_remove("OKSPHERE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = oksphere(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn csv_body(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn energy_of_double_cap() {
    let v = stdout_json(&["energy", "--z", "-0.5,0.5", "--gamma", "1"]);
    let total = v["total_over_pi"].as_f64().unwrap();
    assert!((total - 3.96278).abs() < 1e-5, "{total}");
    assert_eq!(v["pattern"]["z"], serde_json::json!([-0.5, 0.5]));
    assert_eq!(v["meta"]["tool"], "oksphere");
    assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 64);

    let q = stdout_json(&["energy", "--z", "-0.5,0.5", "--gamma", "1", "--evaluator", "quadrature"]);
    assert!((q["total_over_pi"].as_f64().unwrap() - total).abs() < 1e-9);
}

#[test]
fn gamma_curve_starts_near_one_quarter() {
    let out = oksphere(&["gamma-curve", "--branch", "3", "--z1", "0.01:0.68:200"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# oksphere "));
    assert_eq!(lines.next().unwrap(), "z1,gamma,branch");
    let rows = csv_body(&text);
    assert_eq!(rows.len(), 200);
    let z1: f64 = rows[0][0].parse().unwrap();
    let gamma: f64 = rows[0][1].parse().unwrap();
    // the curve leaves 1/4 with slope 3/8, so at z1 = 0.01 it sits 3.8e-3 above the limit
    assert!((gamma - 0.25 - 0.375 * z1).abs() < 1e-3, "{gamma}");
    assert!(gamma > 0.25);
    assert!(rows.iter().all(|r| r[2] == "3"));
}

#[test]
fn csv_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = oksphere(&["sweep2", "--z1", "-1:0:21", "--gamma", "0.1:10:3", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "z1,gamma,energy_over_pi");
    assert_eq!(csv_body(&text).len(), 21 * 3);
}

#[test]
fn shuffled_minimize_is_reproducible_per_seed() {
    let run = |seed: &str| {
        oksphere(&["--seed", seed, "minimize", "--z", "-0.7,-0.2,0.3,0.8", "--gamma", "20", "--order", "shuffled"]).stdout
    };
    assert_eq!(run("7"), run("7"));
    let v: Value = serde_json::from_slice(&run("7")).unwrap();
    assert_eq!(v["meta"]["seed"], 7);
    assert_eq!(v["monotone"], true);
}

#[test]
fn minimize_writes_trace_and_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_oksphere"))
        .args(["minimize", "--z", "-0.4,0.6", "--gamma", "5"])
        .env("OKSPHERE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let trace = fs::read_to_string(dir.path().join("minimize_trace.csv")).unwrap();
    assert_eq!(trace.lines().nth(1).unwrap(), "cycle,energy_over_pi,max_move");
    let energies: Vec<f64> = csv_body(&trace).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0]));

    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("minimize.json")).unwrap()).unwrap();
    let z: Vec<f64> = serde_json::from_value(v["pattern"]["z"].clone()).unwrap();
    assert!((z[0] + 0.5).abs() < 1e-6 && (z[1] - 0.5).abs() < 1e-6, "{z:?}");
    assert!(v.get("trace").is_none());
}

#[test]
fn continuation_catalog_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("branch.jsonl");
    let out = oksphere(&[
        "--out",
        path.to_str().unwrap(),
        "critical",
        "continue",
        "--n",
        "3",
        "--gamma-start",
        "2",
        "--gamma-end",
        "20",
        "--steps",
        "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 7);
    for key in ["n", "gamma", "z", "lambda", "residual", "min_gap"] {
        assert!(records[0].get(key).is_some(), "{key}");
    }
    assert_eq!(records.last().unwrap()["gamma"], 20.0);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("branch.jsonl.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "critical continue");
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"z": [-0.5, 0.5], "gamma": 1}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout_json(&["--config", cfg, "energy"]);
    let from_flags = stdout_json(&["energy", "--z=-0.5,0.5", "--gamma=1"]);
    assert_eq!(from_file, from_flags);
    let overridden = stdout_json(&["--config", cfg, "energy", "--gamma", "2"]);
    assert_eq!(overridden["gamma"], 2.0);
    assert_ne!(overridden["meta"]["config_hash"], from_file["meta"]["config_hash"]);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"nope": 1}"#).unwrap();
    let out = oksphere(&["--config", bad.to_str().unwrap(), "energy", "--z", "0", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(oksphere(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(oksphere(&["energy", "--z", "0.5,0.1", "--gamma", "1"]).status.code(), Some(1));
    let out = oksphere(&["critical", "solve", "--n", "9", "--gamma", "0.01", "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(oksphere(&["--help"]).status.code(), Some(0));
}

#[test]
fn stability_report_shape() {
    let v = stdout_json(&["stability", "--z", "-0.5,0.5", "--gamma", "0.5", "--k-max", "8"]);
    for key in ["gamma", "K", "min_eig", "mode", "certificates", "verdict"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["K"], 8);
    assert_eq!(v["verdict"], "certified-unstable");
    assert_eq!(v["mode"]["parity"], "constant");

    let solved = stdout_json(&["stability", "--n", "4", "--gamma", "40", "--k-max", "8"]);
    assert_eq!(solved["certificates"]["single_mode"].as_array().unwrap().len(), 8);

    let out = oksphere(&["stability", "--z", "-0.3,0.1,0.6", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn escape_reports_both_outcomes() {
    let yes = stdout_json(&["escape", "--alpha", "0.6", "--beta", "1", "--gamma", "1e4"]);
    assert_eq!(yes["escaped"], true);
    assert!(yes["escape"]["e_min"].as_f64().unwrap() < yes["escape"]["limit"].as_f64().unwrap());
    let no = stdout_json(&["escape", "--alpha", "0.6", "--beta", "1", "--gamma", "0.1"]);
    assert_eq!(no["escaped"], false);
    let merged = stdout_json(&["escape", "--z", "-0.2,0.3,0.3", "--gamma", "200"]);
    assert_eq!(merged["mode"], "boundary");
}

#[test]
fn small_tables() {
    let out = oksphere(&["bounds", "--gamma", "0:1:2"]);
    let rows = csv_body(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][2], "-0.5");
    let bound: f64 = rows[1][2].parse().unwrap();
    assert!((bound + 0.941_152_7).abs() < 1e-6);

    let out = oksphere(&["xi", "--z", "-0.5,0.5", "--points", "5"]);
    let rows = csv_body(&String::from_utf8(out.stdout).unwrap());
    let xi: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(xi, vec![0.0, -0.5, 0.0, 0.5, 0.0]);

    let u = stdout_json(&["critical", "check-uniform", "--count", "5"]);
    assert!(u["min_residual_over_sweep"].as_f64().unwrap() >= 1e-3);
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let out = oksphere(&["verify", "--out", report.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 11);
    let v: Value = serde_json::from_str(&fs::read_to_string(Path::new(&report)).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(oksphere(&["verify", "--only", "12"]).status.code(), Some(1));
}
