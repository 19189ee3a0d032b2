//! Difficulty-adjustment methods behind one trait, looked up by name.
//!
//! A method sees the player's recent play and hands back the opponent policy
//! for the next stretch of the match. Sessions (batch or live) only talk to
//! [`DdaMethod`], so a new method is one factory in the [`MethodRegistry`].

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::baselines::{
    ladder_update, level_to_archetype, lstmfc_act, lstmfc_embed, DifficultyLevel, LstmFcParams, MatchOutcome,
};
use crate::error::{DdaError, Result};
use crate::meta::{adapt_to_player, MetaConfig};
use crate::nn::{mlp_predict, ParamVector};
use crate::players::{stream_seed, ScriptedPlayer};
use crate::rink::{Action, Observation, RinkConfig};
use crate::trajectory::Trajectory;

/// Plays side B from its egocentric observation.
pub trait OpponentPolicy: Send {
    fn act(&mut self, obs: &Observation) -> Action;
}

/// Feed-forward behavior-cloned policy.
#[derive(Debug, Clone)]
pub struct MlpPolicy {
    params: ParamVector,
}

impl MlpPolicy {
    pub fn new(params: ParamVector) -> Result<Self> {
        if params.layout().input_dim() != crate::rink::OBS_DIM
            || params.layout().output_dim() != crate::rink::ACTION_DIM
        {
            return Err(DdaError::shape("policy must map 8 observation values to 2 action values"));
        }
        Ok(MlpPolicy { params })
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }
}

impl OpponentPolicy for MlpPolicy {
    fn act(&mut self, obs: &Observation) -> Action {
        let out = mlp_predict(&self.params, &obs.0).expect("shape checked at construction");
        Action::new(out[0], out[1])
    }
}

/// Action head conditioned on a fixed player embedding.
#[derive(Debug, Clone)]
pub struct EmbeddingPolicy {
    params: Arc<LstmFcParams>,
    embedding: Vec<f64>,
}

impl OpponentPolicy for EmbeddingPolicy {
    fn act(&mut self, obs: &Observation) -> Action {
        lstmfc_act(&self.params, &self.embedding, obs).expect("embedding width fixed by the encoder")
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedPolicy(pub ScriptedPlayer);

impl OpponentPolicy for ScriptedPolicy {
    fn act(&mut self, obs: &Observation) -> Action {
        self.0.act(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustPoint {
    /// After the pre-session demo.
    Initial,
    /// At the mid-session break.
    Midpoint,
}

/// What a method may look at when it adjusts.
#[derive(Debug, Clone, Copy)]
pub struct AdjustmentEvidence<'a> {
    /// The player's own (side A) transitions since the last adjustment.
    pub trajectory: &'a Trajectory,
    pub goals_for: u32,
    pub goals_against: u32,
    pub point: AdjustPoint,
}

pub trait DdaMethod: Send {
    fn name(&self) -> &str;

    fn adjust(&mut self, evidence: &AdjustmentEvidence<'_>) -> Result<Box<dyn OpponentPolicy>>;

    /// Opponent used before any adjustment or when the evidence is unusable.
    fn fallback(&self) -> Box<dyn OpponentPolicy>;

    /// Current ladder level, for methods that have one.
    fn level(&self) -> Option<DifficultyLevel> {
        None
    }
}

/// Shared inputs for building methods.
#[derive(Debug, Clone)]
pub struct MethodAssets {
    pub rink: RinkConfig,
    pub meta_params: Option<Arc<ParamVector>>,
    pub meta: MetaConfig,
    pub lstmfc: Option<Arc<LstmFcParams>>,
    /// Only the most recent demo transitions are used for adaptation.
    pub adapt_window: usize,
}

impl MethodAssets {
    pub fn new(rink: RinkConfig) -> Self {
        MethodAssets { rink, meta_params: None, meta: MetaConfig::default(), lstmfc: None, adapt_window: 512 }
    }

    fn recent(&self, traj: &Trajectory) -> Trajectory {
        let start = traj.len().saturating_sub(self.adapt_window.max(1));
        traj.slice(start, traj.len())
    }
}

/// Per-player gradient adaptation of the meta-trained policy.
pub struct FastAdapt {
    meta_params: Arc<ParamVector>,
    cfg: MetaConfig,
    assets: MethodAssets,
}

impl FastAdapt {
    pub fn new(assets: &MethodAssets) -> Result<Self> {
        let meta_params = assets
            .meta_params
            .clone()
            .ok_or_else(|| DdaError::Asset("fast_adapt needs a meta-trained checkpoint".into()))?;
        MlpPolicy::new((*meta_params).clone())?;
        Ok(FastAdapt { meta_params, cfg: assets.meta.clone(), assets: assets.clone() })
    }
}

impl DdaMethod for FastAdapt {
    fn name(&self) -> &str {
        "fast_adapt"
    }

    fn adjust(&mut self, evidence: &AdjustmentEvidence<'_>) -> Result<Box<dyn OpponentPolicy>> {
        if evidence.trajectory.is_empty() {
            log::warn!("fast_adapt: no player data at {:?}, keeping the meta policy", evidence.point);
            return Ok(self.fallback());
        }
        let demo = self.assets.recent(evidence.trajectory);
        let adapted = adapt_to_player(&self.meta_params, &demo, &self.cfg)?;
        Ok(Box::new(MlpPolicy::new(adapted)?))
    }

    fn fallback(&self) -> Box<dyn OpponentPolicy> {
        Box::new(MlpPolicy { params: (*self.meta_params).clone() })
    }
}

/// Embedding-conditioned policy; adjusting re-encodes the latest demo.
pub struct LstmFc {
    params: Arc<LstmFcParams>,
    assets: MethodAssets,
}

impl LstmFc {
    pub fn new(assets: &MethodAssets) -> Result<Self> {
        let params =
            assets.lstmfc.clone().ok_or_else(|| DdaError::Asset("lstm_fc needs a trained checkpoint".into()))?;
        Ok(LstmFc { params, assets: assets.clone() })
    }
}

impl DdaMethod for LstmFc {
    fn name(&self) -> &str {
        "lstm_fc"
    }

    fn adjust(&mut self, evidence: &AdjustmentEvidence<'_>) -> Result<Box<dyn OpponentPolicy>> {
        if evidence.trajectory.is_empty() {
            log::warn!("lstm_fc: no player data at {:?}, using a zero embedding", evidence.point);
            return Ok(self.fallback());
        }
        let embedding = lstmfc_embed(&self.params, &self.assets.recent(evidence.trajectory))?;
        Ok(Box::new(EmbeddingPolicy { params: self.params.clone(), embedding }))
    }

    fn fallback(&self) -> Box<dyn OpponentPolicy> {
        Box::new(EmbeddingPolicy { params: self.params.clone(), embedding: vec![0.0; self.params.embed_dim()] })
    }
}

/// Conventional ladder over the scripted level presets.
pub struct Ladder {
    level: DifficultyLevel,
    rink: RinkConfig,
    seed: u64,
    adjustments: u64,
}

impl Ladder {
    pub fn new(start: DifficultyLevel, rink: RinkConfig, seed: u64) -> Self {
        Ladder { level: start, rink, seed, adjustments: 0 }
    }

    fn policy(&self) -> Box<dyn OpponentPolicy> {
        let seed = stream_seed(self.seed, self.adjustments);
        Box::new(ScriptedPolicy(ScriptedPlayer::new(level_to_archetype(self.level), self.rink, seed)))
    }
}

impl DdaMethod for Ladder {
    fn name(&self) -> &str {
        "ladder"
    }

    fn adjust(&mut self, evidence: &AdjustmentEvidence<'_>) -> Result<Box<dyn OpponentPolicy>> {
        self.level = ladder_update(self.level, MatchOutcome::from_goals(evidence.goals_for, evidence.goals_against));
        self.adjustments += 1;
        Ok(self.policy())
    }

    fn fallback(&self) -> Box<dyn OpponentPolicy> {
        self.policy()
    }

    fn level(&self) -> Option<DifficultyLevel> {
        Some(self.level)
    }
}

/// No adjustment at all: always the strongest preset.
pub struct FixedLevel {
    level: DifficultyLevel,
    rink: RinkConfig,
    seed: u64,
}

impl FixedLevel {
    pub fn new(level: DifficultyLevel, rink: RinkConfig, seed: u64) -> Self {
        FixedLevel { level, rink, seed }
    }
}

impl DdaMethod for FixedLevel {
    fn name(&self) -> &str {
        "fixed_level9"
    }

    fn adjust(&mut self, _evidence: &AdjustmentEvidence<'_>) -> Result<Box<dyn OpponentPolicy>> {
        Ok(self.fallback())
    }

    fn fallback(&self) -> Box<dyn OpponentPolicy> {
        Box::new(ScriptedPolicy(ScriptedPlayer::new(level_to_archetype(self.level), self.rink, self.seed)))
    }

    fn level(&self) -> Option<DifficultyLevel> {
        Some(self.level)
    }
}

pub type MethodFactory = fn(&MethodAssets, u64) -> Result<Box<dyn DdaMethod>>;

/// Name → constructor table.
#[derive(Clone)]
pub struct MethodRegistry {
    factories: BTreeMap<String, MethodFactory>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry { factories: BTreeMap::new() }
    }

    /// `fast_adapt`, `lstm_fc`, `ladder` and the `fixed_level9` control.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("fast_adapt", |assets, _| Ok(Box::new(FastAdapt::new(assets)?)));
        reg.register("lstm_fc", |assets, _| Ok(Box::new(LstmFc::new(assets)?)));
        reg.register("ladder", |assets, seed| Ok(Box::new(Ladder::new(DifficultyLevel::NEUTRAL, assets.rink, seed))));
        reg.register("fixed_level9", |assets, seed| {
            Ok(Box::new(FixedLevel::new(DifficultyLevel::MAX, assets.rink, seed)))
        });
        reg
    }

    pub fn register(&mut self, name: &str, factory: MethodFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, assets: &MethodAssets, seed: u64) -> Result<Box<dyn DdaMethod>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            DdaError::config(format!("unknown method {name:?}; known: {}", self.names().collect::<Vec<_>>().join(", ")))
        })?;
        factory(assets, seed)
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// Parses a comma-separated method list, rejecting unknown or repeated names.
pub fn parse_method_list(registry: &MethodRegistry, list: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !registry.contains(name) {
            return Err(DdaError::config(format!("unknown method {name:?}")));
        }
        if out.iter().any(|n| n == name) {
            return Err(DdaError::config(format!("method {name:?} listed twice")));
        }
        out.push(name.to_string());
    }
    if out.is_empty() {
        return Err(DdaError::config("no methods selected"));
    }
    Ok(out)
}
