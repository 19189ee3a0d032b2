use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use dda_core::baselines::{level_to_archetype, DifficultyLevel};
use dda_core::config::window_splits;
use dda_core::eval::{
    aggregate, compute_possession, export_report, measure_throughput, play_segment, run_eval, ReportFormat,
};
use dda_core::meta::write_jsonl;
use dda_core::methods::{parse_method_list, MethodRegistry, ScriptedPolicy};
use dda_core::nn::Checkpoint;
use dda_core::pipeline;
use dda_core::players::{stream_seed, ScriptedPlayer};
use dda_core::{DdaError, Result};
use serde_json::json;

use crate::ConfigArgs;

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3600)]
    steps: usize,
    /// Ladder level of the side-A player.
    #[arg(long, default_value_t = 5)]
    player_level: u8,
    /// Ladder level of the side-B opponent.
    #[arg(long, default_value_t = 5)]
    opponent_level: u8,
    /// Also save side A's trajectory here.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let player = level_to_archetype(DifficultyLevel::new(args.player_level)?);
    let opponent = level_to_archetype(DifficultyLevel::new(args.opponent_level)?);
    let mut a = ScriptedPlayer::new(player.clone(), cfg.rink, stream_seed(args.seed, 0));
    let mut b = ScriptedPolicy(ScriptedPlayer::new(opponent, cfg.rink, stream_seed(args.seed, 1)));
    let seg = play_segment(&mut a, &mut b, &cfg.rink, args.steps, args.seed)?;
    if let Some(path) = &args.out {
        seg.trajectory.save(path, Some(&player))?;
    }
    let summary = json!({
        "seed": args.seed,
        "steps": args.steps,
        "goals_for": seg.goals_for,
        "goals_against": seg.goals_against,
        "possession_frac": compute_possession(&seg.puck_y, &cfg.rink)?,
    });
    println!("{summary}");
    Ok(())
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration log as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn write_log<T: serde::Serialize>(path: &Option<PathBuf>, records: &[T]) -> Result<()> {
    if let Some(path) = path {
        write_jsonl(BufWriter::new(File::create(path)?), records)?;
    }
    Ok(())
}

pub fn train_meta(args: &TrainArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let data = pipeline::training_data(&cfg)?;
    log::info!("recorded {} transitions from {} players", cfg.population.total_transitions(), data.len());
    let outcome = pipeline::train_meta(&cfg, data)?;
    if let Some(last) = outcome.log.last() {
        log::info!("final meta-objective {:.6}", last.meta_objective);
    }
    Checkpoint::from_params(&outcome.params, pipeline::checkpoint_meta(&cfg)?).save(&args.out)?;
    write_log(&args.log, &outcome.log)
}

pub fn train_lstmfc(args: &TrainArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let data = pipeline::training_data(&cfg)?;
    let outcome = pipeline::train_lstmfc(&cfg, &data)?;
    if let Some(last) = outcome.log.last() {
        log::info!("final epoch loss {:.6}", last.meta_objective);
    }
    outcome.params.save(&args.out, pipeline::checkpoint_meta(&cfg)?)?;
    write_log(&args.log, &outcome.log)
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated method names.
    #[arg(long, default_value = "fast_adapt,lstm_fc,ladder")]
    methods: String,
    /// Number of held-out players; defaults to the configured population.
    #[arg(long)]
    players: Option<usize>,
    /// Report path; a `.csv` extension selects CSV, anything else JSON.
    #[arg(long)]
    out: PathBuf,
    /// Meta-trained policy checkpoint, required by fast_adapt.
    #[arg(long)]
    meta_ckpt: Option<PathBuf>,
    /// LSTM-FC checkpoint, required by lstm_fc.
    #[arg(long)]
    lstmfc_ckpt: Option<PathBuf>,
    /// Per-session results as JSON lines.
    #[arg(long)]
    sessions: Option<PathBuf>,
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(n) = args.players {
        cfg.population.heldout_players = n;
    }
    let registry = MethodRegistry::with_builtins();
    let methods = parse_method_list(&registry, &args.methods)?;
    let assets = pipeline::assets_from(&cfg, args.meta_ckpt.as_deref(), args.lstmfc_ckpt.as_deref())?;
    let players = cfg.population.heldout_players()?;
    if players.is_empty() {
        return Err(DdaError::config("no held-out players to evaluate"));
    }
    log::info!("{} sessions ({} players x {} methods)", players.len() * methods.len(), players.len(), methods.len());
    let results = run_eval(&registry, &assets, &methods, &players, &cfg.session, cfg.eval.seed)?;
    write_log(&args.sessions, &results)?;
    let report = aggregate(&results)?;
    export_report(&report, ReportFormat::from_path(&args.out), &args.out)
}

#[derive(Args)]
pub struct ThroughputArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Where the timing report is written.
    #[arg(long, default_value = "throughput.json")]
    out: PathBuf,
}

pub fn throughput(args: &ThroughputArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let data = pipeline::training_data(&cfg)?;
    let splits = window_splits(&data, cfg.meta.task_window, cfg.meta.demo_fraction)?;
    let report = measure_throughput(&splits, &cfg.meta, &cfg.lstmfc, args.epochs, cfg.seed)?;
    log::info!(
        "fast_adapt {:.1} ms/epoch, lstm_fc {:.1} ms/epoch, ratio {:.2}",
        report.fast_adapt_ms_per_epoch,
        report.lstm_fc_ms_per_epoch,
        report.speedup
    );
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(())
}
