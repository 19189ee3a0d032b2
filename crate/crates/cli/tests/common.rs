#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Stdio;

use dda_core::meta::MetaConfig;
use dda_core::nn::{Checkpoint, CheckpointMeta, ParamVector};
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};

pub const TINY_CONFIG: &str = r#"{
  "seed": 3,
  "population": { "train_players": 3, "heldout_players": 2, "transitions_per_player": 600 },
  "meta": { "iterations": 2, "hidden_widths": [8], "task_window": 200, "meta_batch_size": 2 },
  "lstmfc": { "epochs": 1 },
  "session": { "pre_session_steps": 300, "session_steps": 600, "readapt_at": 300 },
  "live": { "practice_ticks": null, "pre_session_ticks": 90, "half_ticks": 90, "break_ticks": 20 }
}"#;

pub fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, TINY_CONFIG).unwrap();
    path
}

/// An untrained policy checkpoint; enough for the server to build fast_adapt.
pub fn write_meta_checkpoint(dir: &Path) -> PathBuf {
    let path = dir.join("meta.json");
    let layout = MetaConfig::default().policy_layout().unwrap();
    let params = ParamVector::init(&layout, 1);
    Checkpoint::from_params(&params, CheckpointMeta::new(1, serde_json::Value::Null)).save(&path).unwrap();
    path
}

pub fn dda() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_dda"))
}

pub struct Server {
    pub child: Child,
    pub url: String,
}

pub async fn start_server(dir: &Path) -> Server {
    let config = write_config(dir);
    let ckpt = write_meta_checkpoint(dir);
    let mut child = Command::new(env!("CARGO_BIN_EXE_dda"))
        .args(["serve", "--port", "0", "--config"])
        .arg(&config)
        .arg("--ckpt")
        .arg(&ckpt)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .kill_on_drop(true)
        .spawn()
        .expect("spawn dda serve");
    let stdout = child.stdout.take().unwrap();
    let mut lines = BufReader::new(stdout).lines();
    let line = lines.next_line().await.unwrap().expect("server printed its address");
    let addr = line.strip_prefix("listening on ").expect("address line").to_string();
    Server { child, url: format!("ws://{addr}/ws") }
}
