//! Batch sessions against the adjustment methods and the aggregate report.
//!
//! A session is a pre-session against the neutral preset, an initial
//! adjustment, a first half, a zero-length break with a second adjustment,
//! and a second half. Only the two halves count toward the result.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    level_to_archetype, lstmfc_loss_grad, DifficultyLevel, LstmFcConfig, LstmFcParams, LstmFcSample, MatchOutcome,
};
use crate::error::{DdaError, Result};
use crate::meta::{meta_gradient, MetaConfig};
use crate::methods::{
    AdjustPoint, AdjustmentEvidence, DdaMethod, Ladder, MethodAssets, MethodRegistry, OpponentPolicy, ScriptedPolicy,
};
use crate::nn::{OptimizerState, ParamVector};
use crate::players::{stream_seed, Archetype, ScriptedPlayer};
use crate::rink::{GameState, RinkConfig, Side};
use crate::trajectory::{DemoSplit, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionPlan {
    pub pre_session_steps: usize,
    pub session_steps: usize,
    pub readapt_at: usize,
}

impl Default for SessionPlan {
    fn default() -> Self {
        SessionPlan { pre_session_steps: 3600, session_steps: 14_400, readapt_at: 7200 }
    }
}

impl SessionPlan {
    pub fn validate(&self) -> Result<()> {
        if !(0 < self.readapt_at && self.readapt_at < self.session_steps) {
            return Err(DdaError::config(format!(
                "readapt_at {} must lie strictly inside the session of {} steps",
                self.readapt_at, self.session_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub method: String,
    pub player: String,
    pub seed: u64,
    pub goals_for: u32,
    pub goals_against: u32,
    pub possession_frac: f64,
    /// Ladder level after the last adjustment, for laddered methods.
    pub final_level: Option<u8>,
}

impl SessionResult {
    /// Goal share, undefined for a goalless session.
    pub fn win_rate(&self) -> Option<f64> {
        let total = self.goals_for + self.goals_against;
        (total > 0).then(|| f64::from(self.goals_for) / f64::from(total))
    }

    pub fn outcome(&self) -> MatchOutcome {
        MatchOutcome::from_goals(self.goals_for, self.goals_against)
    }
}

/// Share of steps with the puck on side A's half (`y` below the midline).
pub fn compute_possession(puck_y: &[f64], rink: &RinkConfig) -> Result<f64> {
    if puck_y.is_empty() {
        return Err(DdaError::EmptyInput("possession trace"));
    }
    let own = puck_y.iter().filter(|&&y| y < rink.midline()).count();
    Ok(own as f64 / puck_y.len() as f64)
}

/// Running score and trace for one stretch of play.
#[derive(Debug, Clone)]
pub struct Segment {
    pub trajectory: Trajectory,
    pub goals_for: u32,
    pub goals_against: u32,
    pub puck_y: Vec<f64>,
}

/// Plays `steps` from a fresh rink with the player on side A and records
/// the player's transitions.
pub fn play_segment(
    player: &mut ScriptedPlayer,
    opponent: &mut dyn OpponentPolicy,
    rink: &RinkConfig,
    steps: usize,
    seed: u64,
) -> Result<Segment> {
    let mut state = GameState::reset(rink)?;
    play_from(&mut state, player, opponent, rink, steps, seed)
}

fn play_from(
    state: &mut GameState,
    player: &mut ScriptedPlayer,
    opponent: &mut dyn OpponentPolicy,
    rink: &RinkConfig,
    steps: usize,
    seed: u64,
) -> Result<Segment> {
    let mut trajectory = Trajectory::new(player.archetype.id.clone(), seed);
    trajectory.transitions.reserve(steps);
    let mut puck_y = Vec::with_capacity(steps);
    let (start_a, start_b) = (state.score_a, state.score_b);
    for _ in 0..steps {
        let obs_a = state.observe(Side::A, rink);
        let action_a = player.act(&obs_a);
        let action_b = opponent.act(&state.observe(Side::B, rink));
        trajectory.push(obs_a, action_a);
        *state = state.step(action_a, action_b, rink)?.0;
        puck_y.push(state.puck.pos.y);
    }
    Ok(Segment { trajectory, goals_for: state.score_a - start_a, goals_against: state.score_b - start_b, puck_y })
}

/// One full evaluation session for one player and method.
pub fn run_session(
    plan: &SessionPlan,
    player: &Archetype,
    method: &mut dyn DdaMethod,
    rink: &RinkConfig,
    seed: u64,
) -> Result<SessionResult> {
    plan.validate()?;
    let mut me = ScriptedPlayer::new(player.clone(), *rink, stream_seed(seed, 0));

    let neutral = ScriptedPlayer::new(level_to_archetype(DifficultyLevel::NEUTRAL), *rink, stream_seed(seed, 1));
    let pre = play_segment(&mut me, &mut ScriptedPolicy(neutral), rink, plan.pre_session_steps, seed)?;
    let mut opponent = method.adjust(&AdjustmentEvidence {
        trajectory: &pre.trajectory,
        goals_for: pre.goals_for,
        goals_against: pre.goals_against,
        point: AdjustPoint::Initial,
    })?;

    me.clear_memory();
    let mut state = GameState::reset(rink)?;
    let first = play_from(&mut state, &mut me, opponent.as_mut(), rink, plan.readapt_at, seed)?;
    opponent = method.adjust(&AdjustmentEvidence {
        trajectory: &first.trajectory,
        goals_for: first.goals_for,
        goals_against: first.goals_against,
        point: AdjustPoint::Midpoint,
    })?;
    let second = play_from(&mut state, &mut me, opponent.as_mut(), rink, plan.session_steps - plan.readapt_at, seed)?;

    let mut puck_y = first.puck_y;
    puck_y.extend_from_slice(&second.puck_y);
    Ok(SessionResult {
        method: method.name().to_string(),
        player: player.id.clone(),
        seed,
        goals_for: first.goals_for + second.goals_for,
        goals_against: first.goals_against + second.goals_against,
        possession_frac: compute_possession(&puck_y, rink)?,
        final_level: method.level().map(DifficultyLevel::get),
    })
}

/// Per-player session seed shared by every method, so methods are compared
/// on identical player noise.
pub fn session_seed(base: u64, player_index: usize) -> u64 {
    stream_seed(base, player_index as u64)
}

/// Every (player, method) session, ordered player-major then by the given
/// method order. Sessions run in parallel.
pub fn run_eval(
    registry: &MethodRegistry,
    assets: &MethodAssets,
    methods: &[String],
    players: &[Archetype],
    plan: &SessionPlan,
    base_seed: u64,
) -> Result<Vec<SessionResult>> {
    plan.validate()?;
    // Fail fast on missing assets before spending time on sessions.
    for name in methods {
        registry.create(name, assets, 0)?;
    }
    let jobs: Vec<(usize, &String)> = (0..players.len()).flat_map(|p| methods.iter().map(move |m| (p, m))).collect();
    jobs.par_iter()
        .map(|&(p, name)| {
            let seed = session_seed(base_seed, p);
            let mut method = registry.create(name, assets, seed)?;
            run_session(plan, &players[p], method.as_mut(), &assets.rink, seed)
        })
        .collect()
}

/// Identical scripted policies on both sides with no adjustment.
pub fn self_play(
    arch: &Archetype,
    sessions: usize,
    steps: usize,
    rink: &RinkConfig,
    base_seed: u64,
) -> Result<Vec<SessionResult>> {
    (0..sessions)
        .into_par_iter()
        .map(|i| {
            let seed = session_seed(base_seed, i);
            let mut me = ScriptedPlayer::new(arch.clone(), *rink, stream_seed(seed, 0));
            let mut twin = ScriptedPolicy(ScriptedPlayer::new(arch.clone(), *rink, stream_seed(seed, 1)));
            let seg = play_segment(&mut me, &mut twin, rink, steps, seed)?;
            Ok(SessionResult {
                method: "self_play".into(),
                player: arch.id.clone(),
                seed,
                goals_for: seg.goals_for,
                goals_against: seg.goals_against,
                possession_frac: compute_possession(&seg.puck_y, rink)?,
                final_level: None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderTrace {
    /// Opponent level during each segment.
    pub levels: Vec<u8>,
    pub outcomes: Vec<MatchOutcome>,
}

impl LadderTrace {
    /// First segment index whose level lies in `[lo, hi]`.
    pub fn first_in_band(&self, lo: u8, hi: u8) -> Option<usize> {
        self.levels.iter().position(|l| (lo..=hi).contains(l))
    }

    /// Player win fraction over each window of `width` segments starting at
    /// `from`; a draw counts as half a win.
    pub fn rolling_win_rate(&self, from: usize, width: usize) -> Vec<f64> {
        let score = |o: &MatchOutcome| match o {
            MatchOutcome::PlayerWin => 1.0,
            MatchOutcome::Draw => 0.5,
            MatchOutcome::PlayerLoss => 0.0,
        };
        if width == 0 || from >= self.outcomes.len() {
            return Vec::new();
        }
        self.outcomes[from..].windows(width).map(|w| w.iter().map(score).sum::<f64>() / width as f64).collect()
    }
}

/// The ladder against one fixed player over consecutive segments, updating
/// after each segment from its outcome.
pub fn ladder_trial(
    start: DifficultyLevel,
    player: &Archetype,
    segments: usize,
    segment_steps: usize,
    rink: &RinkConfig,
    seed: u64,
) -> Result<LadderTrace> {
    let mut ladder = Ladder::new(start, *rink, stream_seed(seed, 2));
    let mut me = ScriptedPlayer::new(player.clone(), *rink, stream_seed(seed, 0));
    let mut opponent = ladder.fallback();
    let mut trace = LadderTrace { levels: Vec::with_capacity(segments), outcomes: Vec::with_capacity(segments) };
    for _ in 0..segments {
        trace.levels.push(ladder.level().expect("ladder has a level").get());
        me.clear_memory();
        let seg = play_segment(&mut me, opponent.as_mut(), rink, segment_steps, seed)?;
        trace.outcomes.push(MatchOutcome::from_goals(seg.goals_for, seg.goals_against));
        opponent = ladder.adjust(&AdjustmentEvidence {
            trajectory: &seg.trajectory,
            goals_for: seg.goals_for,
            goals_against: seg.goals_against,
            point: AdjustPoint::Midpoint,
        })?;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub n_sessions: usize,
    /// Sessions with at least one goal; the win-rate statistics use these.
    pub n_decided: usize,
    pub win_rate_mean: Option<f64>,
    pub win_rate_sd: Option<f64>,
    pub possession_mean: f64,
    pub possession_sd: f64,
    /// `|win_rate_mean − 0.5|`.
    pub balance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub methods: BTreeMap<String, MethodMetrics>,
}

/// Mean and population standard deviation. The values are sorted first so
/// the result does not depend on input order.
fn mean_sd(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / n).sqrt())
}

pub fn aggregate(results: &[SessionResult]) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(DdaError::EmptyInput("session results"));
    }
    let mut grouped: BTreeMap<&str, Vec<&SessionResult>> = BTreeMap::new();
    for r in results {
        grouped.entry(r.method.as_str()).or_default().push(r);
    }
    let methods = grouped
        .into_iter()
        .map(|(name, rs)| {
            let mut rates: Vec<f64> = rs.iter().filter_map(|r| r.win_rate()).collect();
            let mut poss: Vec<f64> = rs.iter().map(|r| r.possession_frac).collect();
            let (possession_mean, possession_sd) = mean_sd(&mut poss);
            let n_decided = rates.len();
            let (win_rate_mean, win_rate_sd) = if rates.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_sd(&mut rates);
                (Some(m), Some(s))
            };
            let metrics = MethodMetrics {
                n_sessions: rs.len(),
                n_decided,
                win_rate_mean,
                win_rate_sd,
                possession_mean,
                possession_sd,
                balance: win_rate_mean.map(|m| (m - 0.5).abs()),
            };
            (name.to_string(), metrics)
        })
        .collect();
    Ok(MetricsReport { methods })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// Picks the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

pub const CSV_HEADER: &str = "method,n_sessions,win_rate_mean,win_rate_sd,possession_mean,possession_sd";

pub fn report_csv(report: &MetricsReport) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (name, m) in &report.methods {
        let _ = writeln!(
            out,
            "{name},{},{},{},{:.4},{:.4}",
            m.n_sessions,
            cell(m.win_rate_mean),
            cell(m.win_rate_sd),
            m.possession_mean,
            m.possession_sd
        );
    }
    out
}

pub fn report_json(report: &MetricsReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn export_report(report: &MetricsReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report_json(report)?,
        ReportFormat::Csv => report_csv(report),
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Wall-clock cost per epoch of the two trainable methods over the same
/// splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub transitions: usize,
    pub epochs: usize,
    pub fast_adapt_ms_per_epoch: f64,
    pub lstm_fc_ms_per_epoch: f64,
    /// `lstm_fc_ms_per_epoch / fast_adapt_ms_per_epoch`; above 1 means the
    /// fast-adapt policy trains faster.
    pub speedup: f64,
}

/// One epoch is one pass over `data` in batches of `meta.meta_batch_size`
/// (meta-gradient plus outer step) or `lstm.batch_size` (end-to-end
/// gradient plus step).
pub fn measure_throughput(
    data: &[DemoSplit],
    meta: &MetaConfig,
    lstm: &LstmFcConfig,
    epochs: usize,
    seed: u64,
) -> Result<ThroughputReport> {
    if data.is_empty() || epochs == 0 {
        return Err(DdaError::EmptyInput("throughput data or epochs"));
    }
    meta.validate()?;
    let transitions = data.iter().map(|s| s.demo.len() + s.valid.len()).sum();

    let mut params = ParamVector::init(&meta.policy_layout()?, seed);
    let mut opt = OptimizerState::new(meta.outer, params.len());
    let started = Instant::now();
    for _ in 0..epochs {
        for batch in data.chunks(meta.meta_batch_size.max(1)) {
            let (_, grad) = meta_gradient(&params, batch, meta)?;
            opt.step(&mut params, &grad)?;
        }
    }
    let fast_adapt_ms_per_epoch = started.elapsed().as_secs_f64() * 1e3 / epochs as f64;

    let samples = data.iter().map(LstmFcSample::from_split).collect::<Result<Vec<_>>>()?;
    let mut lparams = LstmFcParams::init(seed);
    let mut lstm_opt = OptimizerState::new(lstm.optimizer, lparams.lstm.len());
    let mut fc_opt = OptimizerState::new(lstm.optimizer, lparams.fc.len());
    let started = Instant::now();
    for _ in 0..epochs {
        for batch in samples.chunks(lstm.batch_size.max(1)) {
            let (_, grad) = lstmfc_loss_grad(&lparams, batch)?;
            lstm_opt.step(&mut lparams.lstm, &grad.lstm)?;
            fc_opt.step(&mut lparams.fc, &grad.fc)?;
        }
    }
    let lstm_fc_ms_per_epoch = started.elapsed().as_secs_f64() * 1e3 / epochs as f64;

    Ok(ThroughputReport {
        transitions,
        epochs,
        fast_adapt_ms_per_epoch,
        lstm_fc_ms_per_epoch,
        speedup: lstm_fc_ms_per_epoch / fast_adapt_ms_per_epoch.max(f64::MIN_POSITIVE),
    })
}
