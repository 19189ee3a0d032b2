//! Experiment configuration: one JSON document with every tunable, plus the
//! synthetic populations it describes.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{level_to_archetype, DifficultyLevel, LstmFcConfig};
use crate::error::{DdaError, Result};
use crate::eval::SessionPlan;
use crate::live::LivePlan;
use crate::meta::MetaConfig;
use crate::nn::checkpoint::read_json;
use crate::players::{generate_demo, sample_archetype, stream_seed, Archetype, ArchetypeRanges};
use crate::rink::RinkConfig;
use crate::trajectory::{split_demo, DemoSplit, Trajectory};

/// Players drawn for meta-training and for held-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub train_players: usize,
    pub heldout_players: usize,
    /// Transitions generated per training player.
    pub transitions_per_player: usize,
    pub ranges: ArchetypeRanges,
    pub train_seed: u64,
    pub heldout_seed: u64,
    /// Ladder preset every training player is recorded against.
    pub opponent_level: u8,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            train_players: 40,
            heldout_players: 20,
            transitions_per_player: 5000,
            ranges: ArchetypeRanges::default(),
            train_seed: 1,
            heldout_seed: 7_000_001,
            opponent_level: 5,
        }
    }
}

impl PopulationConfig {
    pub fn total_transitions(&self) -> usize {
        self.train_players * self.transitions_per_player
    }

    pub fn opponent(&self) -> Result<Archetype> {
        Ok(level_to_archetype(DifficultyLevel::new(self.opponent_level)?))
    }

    pub fn training_players(&self) -> Result<Vec<Archetype>> {
        draw_players("train", self.train_players, self.train_seed, &self.ranges)
    }

    pub fn heldout_players(&self) -> Result<Vec<Archetype>> {
        draw_players("heldout", self.heldout_players, self.heldout_seed, &self.ranges)
    }
}

fn draw_players(prefix: &str, n: usize, seed: u64, ranges: &ArchetypeRanges) -> Result<Vec<Archetype>> {
    (0..n)
        .map(|i| {
            let mut a = sample_archetype(stream_seed(seed, i as u64), ranges)?;
            a.id = format!("{prefix}-{i}");
            Ok(a)
        })
        .collect()
}

/// One recorded match per player against `opponent`, generated in parallel.
pub fn record_population(
    players: &[Archetype],
    opponent: &Archetype,
    rink: &RinkConfig,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    players
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate_demo(p, opponent, rink, n_steps, stream_seed(seed, i as u64)))
        .collect()
}

/// Cuts each trajectory into consecutive non-overlapping windows of
/// `window` transitions and splits every window into demo and validation.
pub fn window_splits(trajectories: &[Trajectory], window: usize, demo_fraction: f64) -> Result<Vec<DemoSplit>> {
    if window < 2 {
        return Err(DdaError::config("task window must hold at least two transitions"));
    }
    let mut out = Vec::new();
    for t in trajectories {
        for start in (0..t.len()).step_by(window) {
            let end = start + window;
            if end <= t.len() {
                out.push(split_demo(&t.slice(start, end), demo_fraction)?);
            }
        }
    }
    if out.is_empty() {
        return Err(DdaError::EmptyInput("no trajectory is as long as one task window"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub methods: Vec<String>,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            methods: ["fast_adapt", "lstm_fc", "ladder", "fixed_level9"].map(String::from).to_vec(),
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub rink: RinkConfig,
    pub population: PopulationConfig,
    pub meta: MetaConfig,
    pub lstmfc: LstmFcConfig,
    pub session: SessionPlan,
    pub live: LivePlan,
    pub eval: EvalSettings,
    /// Most recent demo transitions used when a method adapts.
    pub adapt_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            rink: RinkConfig::default(),
            population: PopulationConfig::default(),
            meta: MetaConfig::default(),
            lstmfc: LstmFcConfig::default(),
            session: SessionPlan::default(),
            live: LivePlan::default(),
            eval: EvalSettings::default(),
            adapt_window: 512,
        }
    }
}

impl ExperimentConfig {
    /// Named presets: `desk` (the defaults, about 200k training transitions)
    /// and `full` (60M transitions, far beyond a desk run).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::default()),
            "full" => {
                let mut cfg = Self::default();
                cfg.population.transitions_per_player = 1_500_000;
                cfg.meta.iterations = 20_000;
                cfg.lstmfc.epochs = 200;
                Ok(cfg)
            }
            other => Err(DdaError::config(format!("unknown preset {other:?}; known: desk, full"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = read_json(path.as_ref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.rink.validate()?;
        self.meta.validate()?;
        self.session.validate()?;
        self.live.validate()?;
        self.population.opponent()?;
        if self.adapt_window == 0 {
            return Err(DdaError::config("adapt_window must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_desk_scale() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.population.total_transitions(), 200_000);
        assert_eq!(ExperimentConfig::preset("full").unwrap().population.total_transitions(), 60_000_000);
        assert!(ExperimentConfig::preset("huge").is_err());
    }

    #[test]
    fn partial_json_fills_defaults_and_rejects_unknown_keys() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"seed": 9, "meta": {"alpha": 0.05}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.meta.alpha, 0.05);
        assert_eq!(cfg.meta.inner_steps, MetaConfig::default().inner_steps);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sead": 9}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"meta": {"alfa": 1}}"#).is_err());
    }

    #[test]
    fn populations_are_disjoint_and_seeded() {
        let pop = PopulationConfig { train_players: 3, heldout_players: 2, ..Default::default() };
        let train = pop.training_players().unwrap();
        let held = pop.heldout_players().unwrap();
        assert_eq!(train, pop.training_players().unwrap());
        assert_eq!(train[0].id, "train-0");
        assert!(held.iter().all(|h| train.iter().all(|t| t.seed != h.seed)));
    }

    #[test]
    fn windows_cover_whole_blocks_only() {
        let mut t = Trajectory::new("w", 0);
        for i in 0..25 {
            t.push(crate::rink::Observation([i as f64; 8]), crate::rink::Action::new(0.0, 0.0));
        }
        let splits = window_splits(&[t], 10, 0.5).unwrap();
        assert_eq!(splits.len(), 2);
        assert_eq!(splits[1].demo.transitions[0].observation.0[0], 10.0);
        assert_eq!(splits[1].valid.len(), 5);
    }
}
