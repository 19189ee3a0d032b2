mod common;

use std::path::Path;

use common::{dda, write_config};

fn run(args: &[&str], config: &Path) -> std::process::Output {
    let out = dda().args(args).arg("--config").arg(config).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "dda {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn simulate_prints_a_match_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let traj = dir.path().join("traj.json");
    let out = run(&["simulate", "--seed", "4", "--steps", "600", "--out", traj.to_str().unwrap()], &config);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["steps"], 600);
    assert!(summary["goals_for"].as_u64().is_some());
    assert!(traj.exists());
}

#[test]
fn eval_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let mut reports = Vec::new();
    for name in ["a.json", "b.json", "c.csv"] {
        let path = dir.path().join(name);
        run(&["eval", "--methods", "ladder,fixed_level9", "--players", "2", "--out", path.to_str().unwrap()], &config);
        reports.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let csv = String::from_utf8(reports[2].clone()).unwrap();
    assert!(csv.starts_with("method,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn eval_rejects_unknown_methods_and_missing_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_path = dir.path().join("r.json");
    for methods in ["ladder,telepathy", "fast_adapt"] {
        let out = dda()
            .args(["eval", "--methods", methods, "--out", out_path.to_str().unwrap(), "--config"])
            .arg(&config)
            .output()
            .unwrap();
        assert!(!out.status.success(), "{methods} should fail");
    }
    assert!(!out_path.exists());
}

#[test]
fn trained_checkpoints_feed_eval() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    run(&["train-meta", "--out", &p("meta.json"), "--log", &p("meta.jsonl")], &config);
    run(&["train-lstmfc", "--out", &p("lstm.json")], &config);
    assert_eq!(std::fs::read_to_string(p("meta.jsonl")).unwrap().lines().count(), 2);
    run(
        &[
            "eval",
            "--methods",
            "fast_adapt,lstm_fc",
            "--meta-ckpt",
            &p("meta.json"),
            "--lstmfc-ckpt",
            &p("lstm.json"),
            "--sessions",
            &p("sessions.jsonl"),
            "--out",
            &p("report.json"),
        ],
        &config,
    );
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("report.json")).unwrap()).unwrap();
    assert_eq!(report["methods"]["fast_adapt"]["n_sessions"], 2);
    assert_eq!(report["methods"]["lstm_fc"]["n_sessions"], 2);
    assert_eq!(std::fs::read_to_string(p("sessions.jsonl")).unwrap().lines().count(), 4);
}

#[test]
fn throughput_writes_a_sidecar_with_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("throughput.json");
    run(&["throughput", "--out", out.to_str().unwrap()], &config);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["speedup"].as_f64().unwrap() > 0.0);
    assert!(report["fast_adapt_ms_per_epoch"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_with_unknown_keys_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"meta": {"alpah": 0.1}}"#).unwrap();
    let out = dda().args(["simulate", "--config"]).arg(&config).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah"));
}
