//! Demonstration data: (observation, action) sequences and their
//! demo/validation split.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};
use crate::nn::checkpoint::{read_json, write_json};
use crate::players::Archetype;
use crate::rink::{Action, Observation, ACTION_DIM, OBS_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub action: Action,
}

impl Transition {
    /// `obs ‖ action`, the ten values the sequence encoder consumes.
    pub fn packed(&self) -> [f64; OBS_DIM + ACTION_DIM] {
        let mut out = [0.0; OBS_DIM + ACTION_DIM];
        out[..OBS_DIM].copy_from_slice(&self.observation.0);
        out[OBS_DIM] = self.action.x;
        out[OBS_DIM + 1] = self.action.y;
        out
    }

    pub fn from_packed(values: &[f64]) -> Result<Self> {
        if values.len() != OBS_DIM + ACTION_DIM {
            return Err(DdaError::shape(format!("transition needs 10 values, got {}", values.len())));
        }
        let mut obs = [0.0; OBS_DIM];
        obs.copy_from_slice(&values[..OBS_DIM]);
        Ok(Transition { observation: Observation(obs), action: Action::from_slice(&values[OBS_DIM..])? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    /// Archetype id or human session id.
    pub source: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(source: impl Into<String>, seed: u64) -> Self {
        Trajectory { transitions: Vec::new(), source: source.into(), seed }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn push(&mut self, observation: Observation, action: Action) {
        self.transitions.push(Transition { observation, action });
    }

    /// Contiguous sub-range sharing the source tag and seed.
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        Trajectory { transitions: self.transitions[start..end].to_vec(), source: self.source.clone(), seed: self.seed }
    }

    pub fn save(&self, path: impl AsRef<Path>, archetype: Option<&Archetype>) -> Result<()> {
        let file = TrajectoryFile {
            archetype: archetype.cloned(),
            seed: self.seed,
            transitions: self.transitions.iter().map(|t| t.packed().to_vec()).collect(),
        };
        write_json(path.as_ref(), &file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Trajectory, Option<Archetype>)> {
        let file: TrajectoryFile = read_json(path.as_ref())?;
        file.into_trajectory()
    }
}

/// On-disk layout: `{archetype, seed, transitions: [[8 obs, 2 action], ...]}`
/// with each transition flattened to ten numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub archetype: Option<Archetype>,
    pub seed: u64,
    pub transitions: Vec<Vec<f64>>,
}

impl TrajectoryFile {
    pub fn into_trajectory(self) -> Result<(Trajectory, Option<Archetype>)> {
        let source = self.archetype.as_ref().map_or_else(|| "human".to_string(), |a| a.id.clone());
        let transitions = self.transitions.iter().map(|t| Transition::from_packed(t)).collect::<Result<Vec<_>>>()?;
        Ok((Trajectory { transitions, source, seed: self.seed }, self.archetype))
    }
}

/// `D_demo` for the inner loop and `D_valid` for the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSplit {
    pub demo: Trajectory,
    pub valid: Trajectory,
}

/// First `⌊n·fraction⌋` transitions become the demo, the rest validation.
pub fn split_demo(traj: &Trajectory, demo_fraction: f64) -> Result<DemoSplit> {
    if !(demo_fraction > 0.0 && demo_fraction < 1.0) {
        return Err(DdaError::config(format!("demo fraction must lie in (0, 1), got {demo_fraction}")));
    }
    let n = traj.len();
    let cut = (n as f64 * demo_fraction).floor() as usize;
    if cut == 0 || cut == n {
        return Err(DdaError::EmptySplit { len: n, fraction: demo_fraction });
    }
    Ok(DemoSplit { demo: traj.slice(0, cut), valid: traj.slice(cut, n) })
}
