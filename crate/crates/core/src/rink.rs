//! Fixed-timestep air-hockey table.
//!
//! World frame: x across the table in `[0, width]`, y along it in
//! `[0, length]`. Side A defends the goal at `y = 0` and owns `y < length/2`;
//! side B defends `y = length` and owns the rest. Every state transition is a
//! pure function of its inputs, so two runs with the same inputs agree to the
//! bit.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Scales the vector down so its length does not exceed `max`.
    pub fn clamp_length(self, max: f64) -> Vec2 {
        let len = self.length();
        if len > max {
            self * (max / len)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Table geometry and physics constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RinkConfig {
    pub width: f64,
    pub length: f64,
    pub goal_width: f64,
    pub puck_radius: f64,
    pub striker_radius: f64,
    /// Seconds per step.
    pub dt: f64,
    pub wall_restitution: f64,
    /// Linear velocity damping rate, 1/s.
    pub friction_damping: f64,
    pub v_max_puck: f64,
    pub v_max_striker: f64,
    /// Rate (1/s) at which a striker's velocity closes on its target.
    pub striker_accel_gain: f64,
}

impl Default for RinkConfig {
    fn default() -> Self {
        RinkConfig {
            width: 1.0,
            length: 2.0,
            goal_width: 0.4,
            puck_radius: 0.03,
            striker_radius: 0.05,
            dt: 1.0 / 60.0,
            wall_restitution: 0.95,
            friction_damping: 0.3,
            v_max_puck: 4.0,
            v_max_striker: 2.0,
            striker_accel_gain: 12.0,
        }
    }
}

impl RinkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("length", self.length),
            ("goal_width", self.goal_width),
            ("puck_radius", self.puck_radius),
            ("striker_radius", self.striker_radius),
            ("dt", self.dt),
            ("wall_restitution", self.wall_restitution),
            ("friction_damping", self.friction_damping),
            ("v_max_puck", self.v_max_puck),
            ("v_max_striker", self.v_max_striker),
            ("striker_accel_gain", self.striker_accel_gain),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DdaError::config(format!("rink {name} must be positive, got {value}")));
            }
        }
        if self.goal_width >= self.width {
            return Err(DdaError::config("goal_width must be smaller than width"));
        }
        if 2.0 * self.striker_radius >= self.width || 4.0 * self.striker_radius >= self.length {
            return Err(DdaError::config("striker does not fit in its half"));
        }
        if 2.0 * self.puck_radius >= self.width {
            return Err(DdaError::config("puck does not fit on the table"));
        }
        Ok(())
    }

    pub fn midline(&self) -> f64 {
        0.5 * self.length
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * self.width, 0.5 * self.length)
    }

    /// Steps per second of simulated time.
    pub fn tick_hz(&self) -> f64 {
        1.0 / self.dt
    }

    fn in_goal_mouth(&self, x: f64) -> bool {
        (x - 0.5 * self.width).abs() < 0.5 * self.goal_width
    }
}

/// Target striker velocity as a fraction of `v_max_striker`, in the acting
/// side's egocentric frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub x: f64,
    pub y: f64,
}

impl Action {
    pub const ZERO: Action = Action { x: 0.0, y: 0.0 };

    /// Builds an action, clamping both components to `[-1, 1]`. NaN maps to 0.
    pub fn new(x: f64, y: f64) -> Self {
        Action { x: clamp_unit(x), y: clamp_unit(y) }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match values {
            [x, y] => Ok(Action::new(*x, *y)),
            _ => Err(DdaError::shape(format!("action needs 2 components, got {}", values.len()))),
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn clamped(self) -> Action {
        Action::new(self.x, self.y)
    }

    fn to_world(self, side: Side) -> Vec2 {
        match side {
            Side::A => Vec2::new(self.x, self.y),
            Side::B => Vec2::new(-self.x, -self.y),
        }
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

pub const OBS_DIM: usize = 8;
pub const ACTION_DIM: usize = 2;

/// Egocentric normalized view: puck x, y, vx, vy, own striker x, y,
/// opponent striker x, y. The observer's goal sits at y = -1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn puck_pos(&self) -> Vec2 {
        Vec2::new(self.0[0], self.0[1])
    }

    pub fn puck_vel(&self) -> Vec2 {
        Vec2::new(self.0[2], self.0[3])
    }

    pub fn own_pos(&self) -> Vec2 {
        Vec2::new(self.0[4], self.0[5])
    }

    pub fn opponent_pos(&self) -> Vec2 {
        Vec2::new(self.0[6], self.0[7])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub puck: Body,
    pub striker_a: Body,
    pub striker_b: Body,
    pub score_a: u32,
    pub score_b: u32,
    pub step_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepEvents {
    /// Side that scored during this step, if any.
    pub goal_scored: Option<Side>,
    pub wall_bounces: u32,
    pub striker_hits: u32,
}

impl GameState {
    /// Opening placement: puck at rest at the table center, strikers centered
    /// on their halves at a quarter of the length from their own goal.
    pub fn reset(cfg: &RinkConfig) -> Result<GameState> {
        cfg.validate()?;
        let at_rest = |x: f64, y: f64| Body { pos: Vec2::new(x, y), vel: Vec2::ZERO };
        Ok(GameState {
            puck: at_rest(0.5 * cfg.width, 0.5 * cfg.length),
            striker_a: at_rest(0.5 * cfg.width, 0.125 * cfg.length),
            striker_b: at_rest(0.5 * cfg.width, 0.875 * cfg.length),
            score_a: 0,
            score_b: 0,
            step_index: 0,
        })
    }

    pub fn is_finite(&self) -> bool {
        [self.puck, self.striker_a, self.striker_b].iter().all(|b| b.pos.is_finite() && b.vel.is_finite())
    }

    pub fn striker(&self, side: Side) -> &Body {
        match side {
            Side::A => &self.striker_a,
            Side::B => &self.striker_b,
        }
    }

    pub fn score(&self, side: Side) -> u32 {
        match side {
            Side::A => self.score_a,
            Side::B => self.score_b,
        }
    }

    /// Side whose half currently holds the puck. The midline belongs to B.
    pub fn possession(&self, cfg: &RinkConfig) -> Side {
        if self.puck.pos.y < cfg.midline() {
            Side::A
        } else {
            Side::B
        }
    }

    /// Advances one timestep. `action_a` and `action_b` are each expressed in
    /// their own side's egocentric frame.
    pub fn step(&self, action_a: Action, action_b: Action, cfg: &RinkConfig) -> Result<(GameState, StepEvents)> {
        if !self.is_finite() {
            return Err(DdaError::NumericState(format!("step {} has non-finite bodies", self.step_index)));
        }
        let mut next = *self;
        let mut events = StepEvents::default();
        let dt = cfg.dt;

        // (1) strikers
        next.striker_a = advance_striker(self.striker_a, action_a.clamped().to_world(Side::A), Side::A, cfg);
        next.striker_b = advance_striker(self.striker_b, action_b.clamped().to_world(Side::B), Side::B, cfg);

        // (2) puck damping and drift
        let damping = (1.0 - cfg.friction_damping * dt).max(0.0);
        let mut puck = self.puck;
        puck.vel = puck.vel * damping;
        puck.pos = puck.pos + puck.vel * dt;

        // (3) striker contacts. When both touch the puck in one step the
        // deeper contact is resolved last, so neither side wins a
        // simultaneous hit by table position alone.
        let gap_a = (puck.pos - next.striker_a.pos).length();
        let gap_b = (puck.pos - next.striker_b.pos).length();
        let order = if gap_b > gap_a { [next.striker_b, next.striker_a] } else { [next.striker_a, next.striker_b] };
        for striker in order {
            if resolve_striker_contact(&mut puck, &striker, cfg) {
                events.striker_hits += 1;
            }
        }
        puck.vel = puck.vel.clamp_length(cfg.v_max_puck);

        // (4) walls
        events.wall_bounces = reflect_walls(&mut puck, cfg);

        // (5) goals
        let r = cfg.puck_radius;
        let scorer = if puck.pos.y < r {
            Some(Side::B)
        } else if puck.pos.y > cfg.length - r {
            Some(Side::A)
        } else {
            None
        };
        if let Some(side) = scorer {
            match side {
                Side::A => next.score_a += 1,
                Side::B => next.score_b += 1,
            }
            puck = Body { pos: cfg.center(), vel: Vec2::ZERO };
            events.goal_scored = Some(side);
        }

        next.puck = puck;
        next.step_index += 1;
        Ok((next, events))
    }

    /// Rotates the whole table 180 degrees about its center and swaps the
    /// roles of A and B.
    pub fn mirrored(&self, cfg: &RinkConfig) -> GameState {
        let rotate = |b: Body| Body { pos: Vec2::new(cfg.width - b.pos.x, cfg.length - b.pos.y), vel: -b.vel };
        GameState {
            puck: rotate(self.puck),
            striker_a: rotate(self.striker_b),
            striker_b: rotate(self.striker_a),
            score_a: self.score_b,
            score_b: self.score_a,
            step_index: self.step_index,
        }
    }

    /// Egocentric normalized observation for `side`.
    pub fn observe(&self, side: Side, cfg: &RinkConfig) -> Observation {
        let half_w = 0.5 * cfg.width;
        let half_l = 0.5 * cfg.length;
        let pos = |p: Vec2| ((p.x - half_w) / half_w, (p.y - half_l) / half_l);
        let (px, py) = pos(self.puck.pos);
        let vx = (self.puck.vel.x / cfg.v_max_puck).clamp(-1.0, 1.0);
        let vy = (self.puck.vel.y / cfg.v_max_puck).clamp(-1.0, 1.0);
        let (own, opp) = match side {
            Side::A => (self.striker_a.pos, self.striker_b.pos),
            Side::B => (self.striker_b.pos, self.striker_a.pos),
        };
        let (ox, oy) = pos(own);
        let (qx, qy) = pos(opp);
        let raw = [px, py, vx, vy, ox, oy, qx, qy];
        match side {
            Side::A => Observation(raw),
            Side::B => Observation(raw.map(|v| -v)),
        }
    }
}

fn advance_striker(mut body: Body, target_dir: Vec2, side: Side, cfg: &RinkConfig) -> Body {
    let target = target_dir * cfg.v_max_striker;
    let blend = (cfg.striker_accel_gain * cfg.dt).min(1.0);
    body.vel = (body.vel + (target - body.vel) * blend).clamp_length(cfg.v_max_striker);
    body.pos = body.pos + body.vel * cfg.dt;

    let r = cfg.striker_radius;
    let (y_lo, y_hi) = match side {
        Side::A => (r, cfg.midline() - r),
        Side::B => (cfg.midline() + r, cfg.length - r),
    };
    clamp_axis(&mut body.pos.x, &mut body.vel.x, r, cfg.width - r);
    clamp_axis(&mut body.pos.y, &mut body.vel.y, y_lo, y_hi);
    body
}

fn clamp_axis(pos: &mut f64, vel: &mut f64, lo: f64, hi: f64) {
    if *pos < lo {
        *pos = lo;
        *vel = vel.max(0.0);
    } else if *pos > hi {
        *pos = hi;
        *vel = vel.min(0.0);
    }
}

/// Infinite-mass striker: only the puck's velocity changes. Returns whether
/// the bodies overlapped.
fn resolve_striker_contact(puck: &mut Body, striker: &Body, cfg: &RinkConfig) -> bool {
    let reach = cfg.puck_radius + cfg.striker_radius;
    let offset = puck.pos - striker.pos;
    let dist = offset.length();
    if dist >= reach {
        return false;
    }
    let normal = if dist > 1e-12 {
        offset * (1.0 / dist)
    } else if striker.pos.y < cfg.midline() {
        Vec2::new(0.0, 1.0)
    } else {
        Vec2::new(0.0, -1.0)
    };
    let approach = (puck.vel - striker.vel).dot(normal);
    if approach < 0.0 {
        puck.vel = puck.vel - normal * ((1.0 + cfg.wall_restitution) * approach);
    }
    puck.pos = striker.pos + normal * reach;
    true
}

/// Side walls always reflect; end walls reflect except across the goal mouth.
pub(crate) fn reflect_walls(puck: &mut Body, cfg: &RinkConfig) -> u32 {
    let r = cfg.puck_radius;
    let e = cfg.wall_restitution;
    let mut bounces = 0;
    if puck.pos.x < r {
        puck.pos.x = r;
        puck.vel.x = e * puck.vel.x.abs();
        bounces += 1;
    } else if puck.pos.x > cfg.width - r {
        puck.pos.x = cfg.width - r;
        puck.vel.x = -e * puck.vel.x.abs();
        bounces += 1;
    }
    if !cfg.in_goal_mouth(puck.pos.x) {
        if puck.pos.y < r {
            puck.pos.y = r;
            puck.vel.y = e * puck.vel.y.abs();
            bounces += 1;
        } else if puck.pos.y > cfg.length - r {
            puck.pos.y = cfg.length - r;
            puck.vel.y = -e * puck.vel.y.abs();
            bounces += 1;
        }
    }
    bounces
}
