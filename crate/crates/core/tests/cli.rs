use distsum::graph::{generate, mixing_time, GraphSpec, Threshold};
use serde_json::Value;
use std::process::Command;

fn distsum(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_distsum")).args(args).output().expect("binary runs")
}

#[test]
fn mixing_time_matches_library() {
    let out = distsum(&["mixing-time", "--graph", "clique:16"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let g = generate(&GraphSpec::Clique { n: 16 }).unwrap();
    assert_eq!(v["tau"].as_u64().unwrap() as usize, mixing_time(&g, Threshold::Exact).unwrap());
}

#[test]
fn oracle_prints_moments_entropy_and_top() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.vals");
    let text: String = (1..=30).map(|v| format!("{v} {}\n", v % 12 + 1)).collect();
    std::fs::write(&path, text).unwrap();
    let out = distsum(&["oracle", "--instance", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for p in 0..=4 {
        assert!(v["moments"][format!("F{p}")].is_u64());
    }
    assert_eq!(v["moments"]["F0"], 12);
    assert!(v["entropy"].as_f64().unwrap() > 0.0);
    assert_eq!(v["top_k"].as_array().unwrap().len(), 10);
}

#[test]
fn run_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"model": "congest", "graph": {"family": "clique", "n": 32}, "universe": 256,
            "values": {"kind": "all-distinct"}, "algorithm": {"name": "f0", "epsilon": 0.5}, "seeds": [1, 2]}"#,
    )
    .unwrap();
    let csv = dir.path().join("results.csv");
    let jsonl = dir.path().join("results.jsonl");
    let out = distsum(&["run", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--jsonl", jsonl.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), distsum::harness::CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 2);
    assert_eq!(std::fs::read_to_string(jsonl).unwrap().lines().count(), 2);
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"model": "gossip-ideal", "graph": {"family": "clique", "n": 32}, "universe": 256,
            "values": {"kind": "all-distinct"}, "algorithm": {"name": "f0", "epsilon": 0.5}, "seeds": [1]}"#,
    )
    .unwrap();
    let out = distsum(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not run"));
}
