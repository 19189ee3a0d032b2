//! Scripted stand-ins for human players.
//!
//! A controller sees the table through its own egocentric observation,
//! delayed by a fixed number of steps. When the puck sits on (or comes back
//! into) its half it may commit to an attack, aiming through a linearly
//! extrapolated intercept point at the far goal. Otherwise it guards the
//! line between its own goal and the puck, stepping into the path of shots
//! that come straight at it.

use std::collections::VecDeque;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};
use crate::rink::{Action, GameState, Observation, RinkConfig, Side, Vec2};
use crate::trajectory::Trajectory;

/// Skill parameters of a scripted player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub id: String,
    pub seed: u64,
    /// Fraction of the maximum striker speed the player ever commands.
    pub max_speed_frac: f64,
    pub reaction_delay_steps: usize,
    /// Standard deviation of the aim point, table units.
    pub aim_noise_std: f64,
    /// Probability of committing to an attack at each decision point.
    pub aggression: f64,
    /// Distance of the home position from the player's own goal line.
    pub defense_depth: f64,
}

pub const MAX_SPEED_RANGE: RangeInclusive<f64> = 0.1..=1.0;
pub const REACTION_DELAY_RANGE: RangeInclusive<usize> = 0..=20;
pub const AIM_NOISE_RANGE: RangeInclusive<f64> = 0.0..=0.5;
pub const AGGRESSION_RANGE: RangeInclusive<f64> = 0.0..=1.0;
pub const DEFENSE_DEPTH_RANGE: RangeInclusive<f64> = 0.1..=0.45;

impl Archetype {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("aim_noise_std", self.aim_noise_std, AIM_NOISE_RANGE),
            ("aggression", self.aggression, AGGRESSION_RANGE),
            ("defense_depth", self.defense_depth, DEFENSE_DEPTH_RANGE),
        ];
        for (name, v, range) in checks {
            if !range.contains(&v) {
                return Err(DdaError::config(format!("archetype {name}={v} outside {range:?}")));
            }
        }
        // A zero speed is allowed for a frozen player; the sampling range starts at 0.1.
        if !(0.0..=1.0).contains(&self.max_speed_frac) {
            return Err(DdaError::config(format!("max_speed_frac={} outside [0, 1]", self.max_speed_frac)));
        }
        if !REACTION_DELAY_RANGE.contains(&self.reaction_delay_steps) {
            return Err(DdaError::config(format!("reaction_delay_steps={} outside 0..=20", self.reaction_delay_steps)));
        }
        Ok(())
    }
}

/// Closed sampling interval per archetype field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchetypeRanges {
    pub max_speed_frac: [f64; 2],
    pub reaction_delay_steps: [usize; 2],
    pub aim_noise_std: [f64; 2],
    pub aggression: [f64; 2],
    pub defense_depth: [f64; 2],
}

impl Default for ArchetypeRanges {
    fn default() -> Self {
        ArchetypeRanges {
            max_speed_frac: [*MAX_SPEED_RANGE.start(), *MAX_SPEED_RANGE.end()],
            reaction_delay_steps: [*REACTION_DELAY_RANGE.start(), *REACTION_DELAY_RANGE.end()],
            aim_noise_std: [*AIM_NOISE_RANGE.start(), *AIM_NOISE_RANGE.end()],
            aggression: [*AGGRESSION_RANGE.start(), *AGGRESSION_RANGE.end()],
            defense_depth: [*DEFENSE_DEPTH_RANGE.start(), *DEFENSE_DEPTH_RANGE.end()],
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, name: &str, [lo, hi]: [f64; 2]) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(DdaError::config(format!("{name} interval [{lo}, {hi}] is inverted or not finite")));
    }
    Ok(if lo == hi { lo } else { rng.random_range(lo..=hi) })
}

/// Independent uniform draw of every field.
pub fn sample_archetype(seed: u64, ranges: &ArchetypeRanges) -> Result<Archetype> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_speed_frac = draw(&mut rng, "max_speed_frac", ranges.max_speed_frac)?;
    let [dlo, dhi] = ranges.reaction_delay_steps;
    if dlo > dhi {
        return Err(DdaError::config(format!("reaction_delay_steps interval [{dlo}, {dhi}] is inverted")));
    }
    let reaction_delay_steps = rng.random_range(dlo..=dhi);
    let aim_noise_std = draw(&mut rng, "aim_noise_std", ranges.aim_noise_std)?;
    let aggression = draw(&mut rng, "aggression", ranges.aggression)?;
    let defense_depth = draw(&mut rng, "defense_depth", ranges.defense_depth)?;
    let arch = Archetype {
        id: format!("arch-{seed}"),
        seed,
        max_speed_frac,
        reaction_delay_steps,
        aim_noise_std,
        aggression,
        defense_depth,
    };
    arch.validate()?;
    Ok(arch)
}

/// Steps between attack decisions while the puck stays on the player's half.
const DECISION_INTERVAL: u32 = 15;
/// Proportional gain, 1/s, toward the home position.
const HOME_GAIN: f64 = 4.0;
/// Proportional gain, 1/s, toward an attack target.
const ATTACK_GAIN: f64 = 10.0;
/// Puck speed (m/s) below which a drifting puck is treated as stationary.
const STILL_SPEED: f64 = 0.05;
/// Cosine between the approach and the shooting line needed to strike.
const ALIGN_COS: f64 = 0.95;
/// Longest look-ahead used when extrapolating the puck.
const MAX_LOOKAHEAD_S: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ControllerState {
    delayed: VecDeque<Observation>,
    rng: ChaCha8Rng,
    engaged: bool,
    aim_offset: Vec2,
    until_decision: u32,
}

impl ControllerState {
    pub fn new(seed: u64) -> Self {
        ControllerState {
            delayed: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            engaged: false,
            aim_offset: Vec2::ZERO,
            until_decision: 0,
        }
    }

    /// Forgets buffered observations and any committed attack.
    pub fn clear_memory(&mut self) {
        self.delayed.clear();
        self.engaged = false;
        self.until_decision = 0;
    }
}

/// Table-unit positions in the player's own frame (own goal at y = 0).
struct Egocentric {
    puck: Vec2,
    puck_vel: Vec2,
    own: Vec2,
}

fn to_table(obs: &Observation, rink: &RinkConfig) -> Egocentric {
    let hw = 0.5 * rink.width;
    let hl = 0.5 * rink.length;
    let pos = |v: Vec2| Vec2::new((v.x + 1.0) * hw, (v.y + 1.0) * hl);
    Egocentric { puck: pos(obs.puck_pos()), puck_vel: obs.puck_vel() * rink.v_max_puck, own: pos(obs.own_pos()) }
}

/// One control step. Mutates the controller state (delay buffer, decision
/// latch, noise stream); identical state and input give identical output.
pub fn scripted_act(arch: &Archetype, rink: &RinkConfig, obs: &Observation, state: &mut ControllerState) -> Action {
    state.delayed.push_back(*obs);
    while state.delayed.len() > arch.reaction_delay_steps + 1 {
        state.delayed.pop_front();
    }
    let seen = to_table(state.delayed.front().expect("just pushed"), rink);

    // A puck resting on the midline is within reach of both strikers, and a
    // nearly still puck counts as incoming whatever the sign of its drift.
    let incoming = seen.puck.y < rink.midline() + rink.puck_radius && seen.puck_vel.y <= STILL_SPEED;
    if incoming {
        if state.until_decision == 0 {
            // Aggression decides whether to meet a moving puck; a dead puck
            // on the player's side is always played.
            let still = seen.puck_vel.length() < STILL_SPEED;
            state.engaged = state.rng.random::<f64>() < arch.aggression || still;
            state.aim_offset = if arch.aim_noise_std > 0.0 {
                let noise = Normal::new(0.0, arch.aim_noise_std).expect("std is positive");
                Vec2::new(noise.sample(&mut state.rng), noise.sample(&mut state.rng))
            } else {
                Vec2::ZERO
            };
            state.until_decision = DECISION_INTERVAL;
        }
        state.until_decision -= 1;
    } else {
        state.engaged = false;
        state.until_decision = 0;
    }

    let (target, gain) = if state.engaged {
        (attack_target(&seen, arch, rink) + state.aim_offset, ATTACK_GAIN)
    } else {
        (guard_position(&seen, arch, rink), HOME_GAIN)
    };
    let raw = ((target - seen.own) * (gain / rink.v_max_striker)).clamp_length(1.0) * arch.max_speed_frac;
    Action::new(raw.x, raw.y)
}

/// Point `defense_depth` out from the own goal center on the line toward the
/// puck, so the striker shadows the shot.
fn guard_position(seen: &Egocentric, arch: &Archetype, rink: &RinkConfig) -> Vec2 {
    let goal = Vec2::new(0.5 * rink.width, 0.0);
    let toward = seen.puck - goal;
    let len = toward.length();
    if len < 1e-9 {
        return Vec2::new(0.5 * rink.width, arch.defense_depth);
    }
    goal + toward * (arch.defense_depth / len)
}

fn attack_target(seen: &Egocentric, arch: &Archetype, rink: &RinkConfig) -> Vec2 {
    let speed = (arch.max_speed_frac * rink.v_max_striker).max(1e-6);
    let lookahead = ((seen.puck - seen.own).length() / speed).min(MAX_LOOKAHEAD_S);
    let mut intercept = seen.puck + seen.puck_vel * lookahead;
    intercept.x = intercept.x.clamp(rink.puck_radius, rink.width - rink.puck_radius);
    // Never chase an intercept onto the goal line, where any touch
    // deflects the puck into the own mouth.
    let deepest = rink.striker_radius + rink.puck_radius + rink.striker_radius;
    intercept.y = intercept.y.clamp(deepest, rink.midline());
    let reach = rink.puck_radius + rink.striker_radius;
    let goal = Vec2::new(0.5 * rink.width, rink.length);
    let aim = goal - intercept;
    let aim = aim * (1.0 / aim.length().max(1e-9));
    let approach = intercept - seen.own;
    let aligned = approach.dot(aim) > ALIGN_COS * approach.length();
    if aligned {
        // Lined up behind the puck: drive through it toward the goal.
        intercept + aim * reach
    } else {
        // Get behind the puck on the shooting line first, unless that spot is
        // off the table; then meet the puck head-on.
        let behind = intercept - aim * (1.5 * reach);
        if behind.y < rink.striker_radius + rink.puck_radius {
            intercept
        } else {
            behind
        }
    }
}

/// A scripted player bundling its archetype, rink and controller state.
#[derive(Debug, Clone)]
pub struct ScriptedPlayer {
    pub archetype: Archetype,
    rink: RinkConfig,
    state: ControllerState,
}

impl ScriptedPlayer {
    pub fn new(archetype: Archetype, rink: RinkConfig, seed: u64) -> Self {
        ScriptedPlayer { archetype, rink, state: ControllerState::new(seed) }
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        scripted_act(&self.archetype, &self.rink, obs, &mut self.state)
    }

    pub fn clear_memory(&mut self) {
        self.state.clear_memory();
    }
}

/// Seed for an independent stream derived from a base seed.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random()
}

/// Plays `arch` (side A) against `opponent` (side B) from the opening
/// position and records the side-A transitions.
pub fn generate_demo(
    arch: &Archetype,
    opponent: &Archetype,
    rink: &RinkConfig,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if n_steps < 1 {
        return Err(DdaError::config("a demo needs at least one step"));
    }
    let mut me = ScriptedPlayer::new(arch.clone(), *rink, stream_seed(seed, 0));
    let mut them = ScriptedPlayer::new(opponent.clone(), *rink, stream_seed(seed, 1));
    let mut traj = Trajectory::new(arch.id.clone(), seed);
    traj.transitions.reserve(n_steps);
    let mut state = GameState::reset(rink)?;
    for _ in 0..n_steps {
        let obs_a = state.observe(Side::A, rink);
        let action_a = me.act(&obs_a);
        let action_b = them.act(&state.observe(Side::B, rink));
        traj.push(obs_a, action_a);
        state = state.step(action_a, action_b, rink)?.0;
    }
    Ok(traj)
}
