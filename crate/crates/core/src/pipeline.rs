//! End-to-end steps driven by an [`ExperimentConfig`]: record the training
//! population, train both learned methods, check adaptation on held-out
//! players, and assemble method assets from checkpoints.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{lstmfc_train, LstmFcOutcome, LstmFcParams};
use crate::config::{record_population, window_splits, ExperimentConfig};
use crate::error::Result;
use crate::meta::{adapt_to_player, bc_loss, meta_train, MetaTrainOutcome, WindowSampler};
use crate::methods::MethodAssets;
use crate::nn::checkpoint::{Checkpoint, CheckpointMeta};
use crate::nn::ParamVector;
use crate::players::{generate_demo, stream_seed};
use crate::trajectory::Trajectory;

/// Named seed streams derived from the experiment seed.
mod streams {
    pub const TRAIN_DATA: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const META_INIT: u64 = 3;
    pub const LSTMFC: u64 = 4;
    pub const HELDOUT_DATA: u64 = 5;
    pub const RANDOM_INIT: u64 = 6;
}

/// One match per training player against the configured opponent.
pub fn training_data(cfg: &ExperimentConfig) -> Result<Vec<Trajectory>> {
    let players = cfg.population.training_players()?;
    let opponent = cfg.population.opponent()?;
    record_population(
        &players,
        &opponent,
        &cfg.rink,
        cfg.population.transitions_per_player,
        stream_seed(cfg.seed, streams::TRAIN_DATA),
    )
}

pub fn train_meta(cfg: &ExperimentConfig, data: Vec<Trajectory>) -> Result<MetaTrainOutcome> {
    let mut sampler = WindowSampler::new(
        data,
        cfg.meta.task_window,
        cfg.meta.demo_fraction,
        stream_seed(cfg.seed, streams::SAMPLER),
    )?;
    meta_train(&cfg.meta, &mut sampler, stream_seed(cfg.seed, streams::META_INIT))
}

/// The LSTM-FC baseline sees the same windows the meta-learner samples
/// from, cut without overlap.
pub fn train_lstmfc(cfg: &ExperimentConfig, data: &[Trajectory]) -> Result<LstmFcOutcome> {
    let splits = window_splits(data, cfg.meta.task_window, cfg.meta.demo_fraction)?;
    lstmfc_train(&splits, &cfg.lstmfc, stream_seed(cfg.seed, streams::LSTMFC))
}

pub fn checkpoint_meta(cfg: &ExperimentConfig) -> Result<CheckpointMeta> {
    Ok(CheckpointMeta::new(cfg.seed, serde_json::to_value(cfg)?))
}

/// Valid-set losses for one held-out player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldoutLosses {
    pub player: String,
    pub unadapted: f64,
    pub adapted: f64,
    /// A fresh random initialization given the same adaptation budget.
    pub random_init: f64,
}

/// Records each held-out player for `demo_len + valid_len` steps, adapts on
/// the first `demo_len` transitions and scores on the rest.
pub fn heldout_adaptation(
    cfg: &ExperimentConfig,
    meta_params: &ParamVector,
    demo_len: usize,
    valid_len: usize,
) -> Result<Vec<HeldoutLosses>> {
    let opponent = cfg.population.opponent()?;
    let random = ParamVector::init(meta_params.layout(), stream_seed(cfg.seed, streams::RANDOM_INIT));
    let base = stream_seed(cfg.seed, streams::HELDOUT_DATA);
    cfg.population
        .heldout_players()?
        .iter()
        .enumerate()
        .map(|(i, player)| {
            let t = generate_demo(player, &opponent, &cfg.rink, demo_len + valid_len, stream_seed(base, i as u64))?;
            let demo = t.slice(0, demo_len);
            let valid = t.slice(demo_len, t.len());
            Ok(HeldoutLosses {
                player: player.id.clone(),
                unadapted: bc_loss(meta_params, &valid)?,
                adapted: bc_loss(&adapt_to_player(meta_params, &demo, &cfg.meta)?, &valid)?,
                random_init: bc_loss(&adapt_to_player(&random, &demo, &cfg.meta)?, &valid)?,
            })
        })
        .collect()
}

/// Method assets from the configuration plus whichever checkpoints exist.
pub fn assets_from(
    cfg: &ExperimentConfig,
    meta_ckpt: Option<&Path>,
    lstmfc_ckpt: Option<&Path>,
) -> Result<MethodAssets> {
    let mut assets = MethodAssets::new(cfg.rink);
    assets.meta = cfg.meta.clone();
    assets.adapt_window = cfg.adapt_window;
    if let Some(path) = meta_ckpt {
        assets.meta_params = Some(Arc::new(Checkpoint::load(path)?.into_params()?));
    }
    if let Some(path) = lstmfc_ckpt {
        assets.lstmfc = Some(Arc::new(LstmFcParams::load(path)?.0));
    }
    Ok(assets)
}
