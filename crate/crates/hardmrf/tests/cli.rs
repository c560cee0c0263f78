use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hardmrf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardmrf")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

#[test]
fn unique_sat_generation_counts_one_solution() {
    let dir = tempfile::tempdir().unwrap();
    assert!(hardmrf(dir.path(), &["gen", "--unique-sat", "--k", "2", "--n", "3", "--out", "f.cnf"]).status.success());
    let report = json(&hardmrf(dir.path(), &["check", "--model", "sat", "--formula", "f.cnf", "--count", "--unique"]));
    assert_eq!(report["count"], 1);
    assert_eq!(report["unique"], true);
}

#[test]
fn sample_then_estimate_sat() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f.cnf"), "p cnf 4 2\n1 -2 0\n3 4 0\n").unwrap();
    let out = hardmrf(dir.path(), &["sample", "--model", "sat", "--formula", "f.cnf", "--beta", "0.5", "--seed", "3", "--out", "s.json"]);
    assert!(out.status.success());
    let report = json(&hardmrf(dir.path(), &["estimate", "--model", "sat", "--formula", "f.cnf", "--sample", "s.json", "--bound", "5"]));
    assert!(report["beta_hat"].as_f64().unwrap().abs() <= 5.0);
    assert!(report.get("identifiable").is_some());
}

#[test]
fn coloring_checks_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hardmrf(p, &["gen", "--cycle", "--n", "3", "--out", "g.json", "--h-out", "h.json"]).status.success());
    std::fs::write(p.join("b.json"), "[0.2, 0.0]").unwrap();
    let report = json(&hardmrf(p, &["check", "--model", "coloring", "--graph", "g.json", "--H", "h.json", "--beta", "b.json", "--dobrushin", "--ds", "--count", "--gamma", "1.0,0.0", "--influence-csv", "r.csv"]));
    assert_eq!(report["dobrushin_shlosman"]["alpha"], 0.0);
    assert_eq!(report["dobrushin"]["holds"], true);
    assert_eq!(report["kl"], 0.0);
    assert_eq!(report["count"], 16);
    assert!(std::fs::read_to_string(p.join("r.csv")).unwrap().starts_with("v,w1,"));

    assert!(hardmrf(p, &["sample", "--model", "coloring", "--graph", "g.json", "--H", "h.json", "--beta", "0.2,0", "--sampler", "glauber", "--out", "s.json"]).status.success());
    let est = json(&hardmrf(p, &["estimate", "--model", "coloring", "--graph", "g.json", "--H", "h.json", "--sample", "s.json"]));
    assert_eq!(est["beta_hat"]["values"].as_array().unwrap().len(), 3);
    let rainbow = json(&hardmrf(p, &["check", "--model", "coloring", "--graph", "g.json", "--H", "h.json", "--beta", "0,0", "--rainbow", "--samples", "20", "--delta", "0.1"]));
    assert_eq!(rainbow["condition"]["source"], "Exact");
}

#[test]
fn exit_codes_distinguish_input_and_model_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(hardmrf(p, &["estimate", "--model", "sat"]).status.code(), Some(2));
    std::fs::write(p.join("bad.cnf"), "p cnf 2 1\n1 5 0\n").unwrap();
    assert_eq!(hardmrf(p, &["check", "--model", "sat", "--formula", "bad.cnf", "--count"]).status.code(), Some(2));
    std::fs::write(p.join("unsat.cnf"), "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    assert_eq!(hardmrf(p, &["sample", "--model", "sat", "--formula", "unsat.cnf", "--beta", "0"]).status.code(), Some(3));
    std::fs::write(p.join("f.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();
    std::fs::write(p.join("s.json"), "[0, 0]").unwrap();
    assert_eq!(hardmrf(p, &["estimate", "--model", "sat", "--formula", "f.cnf", "--sample", "s.json"]).status.code(), Some(3));
}

#[test]
fn experiment_writes_csv_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let config = r#"{
        "model": "sat",
        "instance": {"kind": "gadget_union"},
        "beta_star": [0.3],
        "sizes": [64, 128, 256],
        "replicates": 30,
        "sampler": {"kind": "exact"},
        "seed": 5
    }"#;
    std::fs::write(p.join("cfg.json"), config).unwrap();
    let summary = json(&hardmrf(p, &["experiment", "--config", "cfg.json", "--out", "rows.csv"]));
    assert!(summary["fit"]["slope"].is_number());
    let first = std::fs::read(p.join("rows.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 91);
    json(&hardmrf(p, &["experiment", "--config", "cfg.json", "--out", "again.csv"]));
    assert_eq!(first, std::fs::read(p.join("again.csv")).unwrap());
}
