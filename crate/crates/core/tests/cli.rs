use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhlab::lab::report::strip_timestamp;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn qhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhlab")).args(args).output().expect("binary runs")
}

fn preset(name: &str) -> String {
    presets().join(name).to_string_lossy().into_owned()
}

#[test]
fn ledger_run_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qhlab(&["ledger", "--config", &preset("ledger_unit.toml"), "--out", out, "--format", "both"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(dir.path().join("ledger.json")).unwrap();
    let v = strip_timestamp(&json).unwrap();
    assert_eq!(v["schema"], "report_v1");
    assert_eq!(v["experiment"], "ledger");
    assert!(v["results"]["verdicts"].as_array().unwrap().iter().all(|x| x["holds"] == true));
    let csv = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(csv.starts_with("name,level,mantissa,decimal\n"));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qhlab(&["uniformity", "--config", &preset("uniformity_ball.toml"), "--out", out, "--seed", "42", "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = strip_timestamp(&std::fs::read_to_string(dir.path().join("uniformity.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // Subcommand and config disagree.
    let o = qhlab(&["metric", "--config", &preset("ledger_unit.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config is for `ledger`"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[sampling]\nresolutoin = 0.1\n[domain.shape]\nkind = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n").unwrap();
    let o = qhlab(&["uniformity", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolutoin"));

    let o = qhlab(&["uniformity", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_defaults_to_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("u.toml");
    let text = std::fs::read_to_string(presets().join("uniformity_half_space.toml")).unwrap();
    std::fs::write(&cfg, text.replace("experiment = \"uniformity\"\n", "")).unwrap();
    let o = qhlab(&["uniformity", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("uniformity.json").exists());
}

#[test]
fn disconnected_graph_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Two disks joined by a channel far thinner than the sampling resolution.
    let cfg = dir.path().join("thin.toml");
    std::fs::write(
        &cfg,
        r#"
experiment = "metric-table"
seed = 1

[sampling]
resolution = 0.5
neighbors = 4

[domain.shape]
kind = "polygon"
vertices = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.4999], [3.0, 0.4999], [3.0, 0.0], [4.0, 0.0], [4.0, 1.0], [3.0, 1.0], [3.0, 0.5001], [1.0, 0.5001], [1.0, 1.0], [0.0, 1.0]]

[[metric_pairs]]
z1 = [0.5, 0.8]
z2 = [3.5, 0.2]
"#,
    )
    .unwrap();
    let o = qhlab(&["metric", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
