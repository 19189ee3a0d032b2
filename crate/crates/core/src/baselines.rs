//! The two comparison systems: an LSTM-embedding policy conditioned on a
//! player's demo, and the classic 1-9 difficulty ladder.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};
use crate::meta::IterationRecord;
use crate::nn::checkpoint::{check_version, read_json, to_params, write_json, FORMAT_VERSION};
use crate::nn::{
    lstm_backward, lstm_forward, mlp_backward, mlp_forward, mlp_predict, CheckpointMeta, GradVector, LayerKind,
    LayerSpec, Layout, OptimizerConfig, OptimizerState, ParamVector,
};
use crate::players::Archetype;
use crate::rink::{Action, Observation, ACTION_DIM, OBS_DIM};
use crate::trajectory::{DemoSplit, Trajectory};

pub const EMBED_DIM: usize = 10;
pub const LSTM_DEPTH: usize = 2;
pub const FC_HIDDEN: [usize; 3] = [80, 80, 80];

/// Sequence encoder plus the action head it conditions.
///
/// The encoder reads `obs ‖ action` rows, so its input width is the head's
/// observation width plus [`ACTION_DIM`].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmFcParams {
    pub lstm: ParamVector,
    pub fc: ParamVector,
}

impl LstmFcParams {
    pub fn new(lstm: ParamVector, fc: ParamVector) -> Result<Self> {
        if !lstm.layout().is_all(LayerKind::Lstm) || !fc.layout().is_all(LayerKind::FullyConnected) {
            return Err(DdaError::shape("LSTM-FC needs a pure LSTM stack and a pure FC head"));
        }
        let obs_dim = lstm
            .layout()
            .input_dim()
            .checked_sub(ACTION_DIM)
            .filter(|d| *d > 0)
            .ok_or_else(|| DdaError::shape("encoder input must hold an observation and an action"))?;
        if fc.layout().input_dim() != obs_dim + lstm.layout().output_dim() {
            return Err(DdaError::shape(format!(
                "head input {} != observation {obs_dim} + embedding {}",
                fc.layout().input_dim(),
                lstm.layout().output_dim()
            )));
        }
        if fc.layout().output_dim() != ACTION_DIM {
            return Err(DdaError::shape(format!("head must output {ACTION_DIM} values")));
        }
        Ok(LstmFcParams { lstm, fc })
    }

    /// Two 10-unit LSTM layers over 10-value rows; head 18→80→80→80→2.
    pub fn standard_layouts() -> (Layout, Layout) {
        let lstm = Layout::stacked_lstm(OBS_DIM + ACTION_DIM, EMBED_DIM, LSTM_DEPTH).expect("static layout");
        let fc = Layout::mlp(OBS_DIM + EMBED_DIM, &FC_HIDDEN, ACTION_DIM).expect("static layout");
        (lstm, fc)
    }

    pub fn init(seed: u64) -> Self {
        let (lstm, fc) = Self::standard_layouts();
        Self::init_with(&lstm, &fc, seed).expect("standard layouts are consistent")
    }

    pub fn init_with(lstm: &Layout, fc: &Layout, seed: u64) -> Result<Self> {
        Self::new(ParamVector::init(lstm, seed), ParamVector::init(fc, seed.wrapping_add(1)))
    }

    pub fn obs_dim(&self) -> usize {
        self.lstm.layout().input_dim() - ACTION_DIM
    }

    pub fn embed_dim(&self) -> usize {
        self.lstm.layout().output_dim()
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: CheckpointMeta) -> Result<()> {
        let file = LstmFcCheckpoint {
            format_version: FORMAT_VERSION,
            lstm: Section::of(&self.lstm),
            fc: Section::of(&self.fc),
            meta,
        };
        write_json(path.as_ref(), &file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, CheckpointMeta)> {
        let file: LstmFcCheckpoint = read_json(path.as_ref())?;
        check_version(file.format_version)?;
        let params =
            Self::new(to_params(file.lstm.layout, file.lstm.values)?, to_params(file.fc.layout, file.fc.values)?)?;
        Ok((params, file.meta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Section {
    layout: Vec<LayerSpec>,
    values: Vec<f64>,
}

impl Section {
    fn of(params: &ParamVector) -> Self {
        Section { layout: params.layout().layers().to_vec(), values: params.values().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LstmFcCheckpoint {
    format_version: u32,
    lstm: Section,
    fc: Section,
    meta: CheckpointMeta,
}

fn packed_rows(demo: &Trajectory) -> Vec<Vec<f64>> {
    demo.transitions.iter().map(|t| t.packed().to_vec()).collect()
}

/// Final top-layer hidden state after reading the demo in order.
pub fn lstmfc_embed(params: &LstmFcParams, demo: &Trajectory) -> Result<Vec<f64>> {
    if demo.is_empty() {
        return Err(DdaError::EmptyInput("LSTM-FC demo"));
    }
    embed_rows(params, &packed_rows(demo))
}

pub fn embed_rows(params: &LstmFcParams, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(lstm_forward(&params.lstm, rows)?.0)
}

fn head_input(params: &LstmFcParams, embedding: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
    if obs.len() != params.obs_dim() || embedding.len() != params.embed_dim() {
        return Err(DdaError::shape(format!(
            "head expects {} observation and {} embedding values, got {} and {}",
            params.obs_dim(),
            params.embed_dim(),
            obs.len(),
            embedding.len()
        )));
    }
    let mut input = Vec::with_capacity(obs.len() + embedding.len());
    input.extend_from_slice(obs);
    input.extend_from_slice(embedding);
    Ok(input)
}

pub fn act_raw(params: &LstmFcParams, embedding: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
    mlp_predict(&params.fc, &head_input(params, embedding, obs)?)
}

pub fn lstmfc_act(params: &LstmFcParams, embedding: &[f64], obs: &Observation) -> Result<Action> {
    Action::from_slice(&act_raw(params, embedding, &obs.0)?)
}

/// One training example in raw form: the rows the encoder reads and the
/// (observation, action) pairs the head is scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmFcSample {
    pub demo_rows: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl LstmFcSample {
    pub fn from_split(split: &DemoSplit) -> Result<Self> {
        if split.demo.is_empty() || split.valid.is_empty() {
            return Err(DdaError::EmptyInput("LSTM-FC split"));
        }
        Ok(LstmFcSample {
            demo_rows: packed_rows(&split.demo),
            observations: split.valid.transitions.iter().map(|t| t.observation.0.to_vec()).collect(),
            targets: split.valid.transitions.iter().map(|t| t.action.to_array().to_vec()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmFcGrad {
    pub lstm: GradVector,
    pub fc: GradVector,
}

impl LstmFcGrad {
    pub fn norm(&self) -> f64 {
        (self.lstm.norm().powi(2) + self.fc.norm().powi(2)).sqrt()
    }
}

/// Mean over samples of `½·mean‖head(obs, embed(demo)) − action‖²`, with the
/// gradient taken end to end through the head and the encoder.
pub fn lstmfc_loss_grad(params: &LstmFcParams, samples: &[LstmFcSample]) -> Result<(f64, LstmFcGrad)> {
    if samples.is_empty() {
        return Err(DdaError::EmptyInput("LSTM-FC batch"));
    }
    let mut grad = LstmFcGrad { lstm: GradVector::zeros(params.lstm.len()), fc: GradVector::zeros(params.fc.len()) };
    let mut total = 0.0;
    let scale = 1.0 / samples.len() as f64;
    let embed_dim = params.embed_dim();
    for sample in samples {
        if sample.observations.is_empty() || sample.observations.len() != sample.targets.len() {
            return Err(DdaError::shape("sample needs matching, non-empty observations and targets"));
        }
        let (embedding, cache) = lstm_forward(&params.lstm, &sample.demo_rows)?;
        let n = sample.observations.len() as f64;
        let mut d_embedding = vec![0.0; embed_dim];
        let mut loss = 0.0;
        for (obs, target) in sample.observations.iter().zip(&sample.targets) {
            let (out, fc_cache) = mlp_forward(&params.fc, &head_input(params, &embedding, obs)?)?;
            if target.len() != out.len() {
                return Err(DdaError::shape("target width differs from head output"));
            }
            let diff: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
            loss += 0.5 * diff.iter().map(|d| d * d).sum::<f64>();
            let upstream: Vec<f64> = diff.iter().map(|d| d * scale / n).collect();
            let (fc_grad, input_grad) = mlp_backward(&params.fc, &fc_cache, &upstream)?;
            for (g, v) in grad.fc.values.iter_mut().zip(&fc_grad.values) {
                *g += v;
            }
            for (d, v) in d_embedding.iter_mut().zip(&input_grad[obs.len()..]) {
                *d += v;
            }
        }
        total += loss / n;
        let lstm_grad = lstm_backward(&params.lstm, &cache, &d_embedding)?;
        for (g, v) in grad.lstm.values.iter_mut().zip(&lstm_grad.values) {
            *g += v;
        }
    }
    Ok((total * scale, grad))
}

pub fn lstmfc_loss(params: &LstmFcParams, samples: &[LstmFcSample]) -> Result<f64> {
    Ok(lstmfc_loss_grad(params, samples)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmFcConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for LstmFcConfig {
    fn default() -> Self {
        LstmFcConfig { epochs: 20, batch_size: 8, optimizer: OptimizerConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LstmFcOutcome {
    pub params: LstmFcParams,
    /// One record per mini-batch step; `meta_objective` holds the batch loss.
    pub log: Vec<IterationRecord>,
}

/// Mini-batch Adam (or SGD) over shuffled splits, one pass per epoch.
pub fn lstmfc_train(data: &[DemoSplit], cfg: &LstmFcConfig, seed: u64) -> Result<LstmFcOutcome> {
    let (lstm, fc) = LstmFcParams::standard_layouts();
    lstmfc_train_from(LstmFcParams::init_with(&lstm, &fc, seed)?, data, cfg, seed)
}

pub fn lstmfc_train_from(
    mut params: LstmFcParams,
    data: &[DemoSplit],
    cfg: &LstmFcConfig,
    seed: u64,
) -> Result<LstmFcOutcome> {
    if data.is_empty() {
        return Err(DdaError::EmptyInput("LSTM-FC training data"));
    }
    if cfg.batch_size == 0 {
        return Err(DdaError::config("batch_size must be positive"));
    }
    let samples = data.iter().map(LstmFcSample::from_split).collect::<Result<Vec<_>>>()?;
    let mut lstm_opt = OptimizerState::new(cfg.optimizer, params.lstm.len());
    let mut fc_opt = OptimizerState::new(cfg.optimizer, params.fc.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let started = Instant::now();
            let batch: Vec<LstmFcSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let (loss, grad) = lstmfc_loss_grad(&params, &batch)?;
            if !loss.is_finite() {
                return Err(DdaError::Numeric(format!("LSTM-FC loss became {loss} at step {}", log.len())));
            }
            lstm_opt.step(&mut params.lstm, &grad.lstm)?;
            fc_opt.step(&mut params.fc, &grad.fc)?;
            log.push(IterationRecord {
                iter: log.len(),
                meta_objective: loss,
                grad_norm: grad.norm(),
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    Ok(LstmFcOutcome { params, log })
}

/// Integer difficulty in `[1, 9]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct DifficultyLevel(u8);

impl DifficultyLevel {
    pub const MIN: DifficultyLevel = DifficultyLevel(1);
    pub const MAX: DifficultyLevel = DifficultyLevel(9);
    pub const NEUTRAL: DifficultyLevel = DifficultyLevel(5);

    pub fn new(level: u8) -> Result<Self> {
        if (Self::MIN.0..=Self::MAX.0).contains(&level) {
            Ok(DifficultyLevel(level))
        } else {
            Err(DdaError::config(format!("difficulty level {level} outside [1, 9]")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for DifficultyLevel {
    type Error = DdaError;

    fn try_from(level: u8) -> Result<Self> {
        DifficultyLevel::new(level)
    }
}

impl From<DifficultyLevel> for u8 {
    fn from(level: DifficultyLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchOutcome {
    PlayerWin,
    PlayerLoss,
    Draw,
}

impl MatchOutcome {
    pub fn from_goals(goals_for: u32, goals_against: u32) -> Self {
        match goals_for.cmp(&goals_against) {
            std::cmp::Ordering::Greater => MatchOutcome::PlayerWin,
            std::cmp::Ordering::Less => MatchOutcome::PlayerLoss,
            std::cmp::Ordering::Equal => MatchOutcome::Draw,
        }
    }
}

/// A player win raises the opponent one level, a loss lowers it, a draw
/// keeps it.
pub fn ladder_update(level: DifficultyLevel, outcome: MatchOutcome) -> DifficultyLevel {
    let next = match outcome {
        MatchOutcome::PlayerWin => level.0.saturating_add(1),
        MatchOutcome::PlayerLoss => level.0.saturating_sub(1),
        MatchOutcome::Draw => level.0,
    };
    DifficultyLevel(next.clamp(DifficultyLevel::MIN.0, DifficultyLevel::MAX.0))
}

pub const LEVEL1_PRESET: (f64, f64, f64, f64) = (0.2, 12.0, 0.20, 0.2);
pub const LEVEL9_PRESET: (f64, f64, f64, f64) = (1.0, 0.0, 0.02, 0.9);
/// Home distance shared by every ladder preset.
pub const PRESET_DEFENSE_DEPTH: f64 = 0.2;

/// Scripted preset for a level, interpolated linearly between the level-1
/// and level-9 presets. The delay is rounded to whole steps.
pub fn level_to_archetype(level: DifficultyLevel) -> Archetype {
    let t = f64::from(level.0 - 1) / 8.0;
    let lerp = |lo: f64, hi: f64| lo * (1.0 - t) + hi * t;
    let (s1, d1, n1, a1) = LEVEL1_PRESET;
    let (s9, d9, n9, a9) = LEVEL9_PRESET;
    Archetype {
        id: format!("level-{}", level.0),
        seed: u64::from(level.0),
        max_speed_frac: lerp(s1, s9),
        reaction_delay_steps: lerp(d1, d9).round() as usize,
        aim_noise_std: lerp(n1, n9),
        aggression: lerp(a1, a9),
        defense_depth: PRESET_DEFENSE_DEPTH,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_diff_raw, max_relative_error, Layout};

    fn level(l: u8) -> DifficultyLevel {
        DifficultyLevel::new(l).unwrap()
    }

    #[test]
    fn ladder_rule() {
        assert_eq!(ladder_update(level(5), MatchOutcome::PlayerWin), level(6));
        assert_eq!(ladder_update(level(5), MatchOutcome::PlayerLoss), level(4));
        assert_eq!(ladder_update(level(9), MatchOutcome::PlayerWin), level(9));
        assert_eq!(ladder_update(level(1), MatchOutcome::PlayerLoss), level(1));
        assert_eq!(ladder_update(level(3), MatchOutcome::Draw), level(3));
    }

    #[test]
    fn level_bounds_enforced() {
        assert!(DifficultyLevel::new(0).is_err());
        assert!(DifficultyLevel::new(10).is_err());
        assert!(serde_json::from_str::<DifficultyLevel>("12").is_err());
        assert_eq!(serde_json::from_str::<DifficultyLevel>("4").unwrap(), level(4));
    }

    #[test]
    fn outcome_from_goals() {
        assert_eq!(MatchOutcome::from_goals(3, 1), MatchOutcome::PlayerWin);
        assert_eq!(MatchOutcome::from_goals(0, 2), MatchOutcome::PlayerLoss);
        assert_eq!(MatchOutcome::from_goals(2, 2), MatchOutcome::Draw);
    }

    #[test]
    fn preset_endpoints_and_midpoint() {
        let a1 = level_to_archetype(level(1));
        assert_eq!((a1.max_speed_frac, a1.reaction_delay_steps, a1.aim_noise_std, a1.aggression), (0.2, 12, 0.2, 0.2));
        let a9 = level_to_archetype(level(9));
        assert_eq!((a9.max_speed_frac, a9.reaction_delay_steps, a9.aim_noise_std, a9.aggression), (1.0, 0, 0.02, 0.9));
        let a5 = level_to_archetype(level(5));
        assert!((a5.max_speed_frac - 0.6).abs() < 1e-12);
        assert_eq!(a5.reaction_delay_steps, 6);
        assert!((a5.aim_noise_std - 0.11).abs() < 1e-12);
        assert!((a5.aggression - 0.55).abs() < 1e-12);
        for l in 1..=9 {
            level_to_archetype(level(l)).validate().unwrap();
        }
    }

    #[test]
    fn zero_lstm_gives_zero_embedding() {
        let (lstm, fc) = LstmFcParams::standard_layouts();
        let params = LstmFcParams::new(ParamVector::zeros(lstm), ParamVector::init(&fc, 0)).unwrap();
        let mut demo = Trajectory::new("z", 0);
        demo.push(Observation([0.3; 8]), Action::new(0.5, -0.5));
        demo.push(Observation([-0.2; 8]), Action::new(0.1, 0.9));
        // Zero weights: every gate is σ(0) = ½ and g = tanh(0) = 0, so c and h stay 0.
        assert_eq!(lstmfc_embed(&params, &demo).unwrap(), vec![0.0; EMBED_DIM]);
    }

    #[test]
    fn zero_head_outputs_origin() {
        let (lstm, fc) = LstmFcParams::standard_layouts();
        let params = LstmFcParams::new(ParamVector::init(&lstm, 1), ParamVector::zeros(fc)).unwrap();
        let a = lstmfc_act(&params, &[0.4; EMBED_DIM], &Observation([0.1; 8])).unwrap();
        assert_eq!(a, Action { x: 0.0, y: 0.0 });
    }

    #[test]
    fn empty_demo_and_bad_shapes() {
        let params = LstmFcParams::init(3);
        assert!(matches!(lstmfc_embed(&params, &Trajectory::new("e", 0)), Err(DdaError::EmptyInput(_))));
        assert!(matches!(act_raw(&params, &[0.0; 9], &[0.0; 8]), Err(DdaError::Shape(_))));
        let (lstm, _) = LstmFcParams::standard_layouts();
        let wrong_head = ParamVector::init(&Layout::mlp(17, &[4], 2).unwrap(), 0);
        assert!(LstmFcParams::new(ParamVector::init(&lstm, 0), wrong_head).is_err());
    }

    #[test]
    fn embedding_depends_on_order() {
        let params = LstmFcParams::init(5);
        let mut demo = Trajectory::new("o", 0);
        demo.push(Observation([0.5, -0.1, 0.2, 0.0, 0.3, -0.4, 0.1, 0.6]), Action::new(0.7, -0.2));
        demo.push(Observation([-0.3, 0.4, -0.6, 0.1, 0.0, 0.2, -0.5, 0.1]), Action::new(-0.4, 0.3));
        let forward = lstmfc_embed(&params, &demo).unwrap();
        demo.transitions.swap(0, 1);
        let swapped = lstmfc_embed(&params, &demo).unwrap();
        assert!(forward.iter().zip(&swapped).any(|(a, b)| (a - b).abs() > 1e-6));
    }

    fn miniature() -> (LstmFcParams, Vec<LstmFcSample>) {
        let lstm = Layout::stacked_lstm(4, 3, 2).unwrap();
        let fc = Layout::mlp(5, &[4], 2).unwrap();
        let params = LstmFcParams::init_with(&lstm, &fc, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        use rand::Rng;
        let mut row = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let samples = (0..2)
            .map(|_| LstmFcSample {
                demo_rows: (0..4).map(|_| row(4)).collect(),
                observations: (0..3).map(|_| row(2)).collect(),
                targets: (0..3).map(|_| row(2)).collect(),
            })
            .collect();
        (params, samples)
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        let (params, samples) = miniature();
        let (_, grad) = lstmfc_loss_grad(&params, &samples).unwrap();
        let n_lstm = params.lstm.len();
        let mut flat = params.lstm.values().to_vec();
        flat.extend_from_slice(params.fc.values());
        let numeric = finite_diff_raw(
            |v| {
                let p = LstmFcParams {
                    lstm: params.lstm.with_values(v[..n_lstm].to_vec())?,
                    fc: params.fc.with_values(v[n_lstm..].to_vec())?,
                };
                lstmfc_loss(&p, &samples)
            },
            &flat,
            1e-5,
        )
        .unwrap();
        let mut analytic = grad.lstm.values.clone();
        analytic.extend_from_slice(&grad.fc.values);
        assert!(max_relative_error(&analytic, &numeric, 1e-8) < 1e-4);
    }

    fn tiny_splits() -> Vec<DemoSplit> {
        (0..4)
            .map(|k| {
                let mut t = Trajectory::new(format!("p{k}"), k);
                for i in 0..16 {
                    let v = ((i + 3 * k as usize) as f64 * 0.37).sin();
                    t.push(Observation([v, -v, 0.5 * v, 0.1, 0.2, -0.3, v * v, 0.0]), Action::new(0.6 * v, -0.4 * v));
                }
                crate::trajectory::split_demo(&t, 0.5).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_epochs_returns_init() {
        let cfg = LstmFcConfig { epochs: 0, ..Default::default() };
        let out = lstmfc_train(&tiny_splits(), &cfg, 2).unwrap();
        assert_eq!(out.params, LstmFcParams::init(2));
        assert!(out.log.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let cfg = LstmFcConfig { epochs: 30, batch_size: 2, ..Default::default() };
        let data = tiny_splits();
        let a = lstmfc_train(&data, &cfg, 8).unwrap();
        let b = lstmfc_train(&data, &cfg, 8).unwrap();
        assert_eq!(a.params, b.params);
        let samples: Vec<_> = data.iter().map(|s| LstmFcSample::from_split(s).unwrap()).collect();
        let before = lstmfc_loss(&LstmFcParams::init(8), &samples).unwrap();
        let after = lstmfc_loss(&a.params, &samples).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = LstmFcParams::init(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lstmfc.json");
        params.save(&path, CheckpointMeta::new(6, serde_json::Value::Null)).unwrap();
        let (back, meta) = LstmFcParams::load(&path).unwrap();
        assert_eq!(back, params);
        assert_eq!(meta.seed, 6);
    }
}
