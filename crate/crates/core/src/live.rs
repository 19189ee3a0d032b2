//! Real-time session state machine and its wire messages.
//!
//! The session is driven one tick at a time by the caller (the WebSocket
//! server, or a test). It owns the authoritative rink state, the human's demo
//! buffer and the active opponent. Adaptation either runs inline or on a
//! worker thread; in the latter case the result is picked up at the start of
//! a later tick, and the frozen phases wait for it.

use std::sync::mpsc::{self, Receiver, TryRecvError};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::baselines::{level_to_archetype, DifficultyLevel};
use crate::error::{DdaError, Result};
use crate::methods::{AdjustPoint, AdjustmentEvidence, DdaMethod, OpponentPolicy, ScriptedPolicy};
use crate::players::{stream_seed, ScriptedPlayer};
use crate::rink::{Action, GameState, RinkConfig, Side};
use crate::trajectory::Trajectory;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Practice,
    PreSession,
    Adapting,
    FirstHalf,
    Break,
    SecondHalf,
    Finished,
}

impl SessionPhase {
    pub const ORDER: [SessionPhase; 7] = [
        SessionPhase::Practice,
        SessionPhase::PreSession,
        SessionPhase::Adapting,
        SessionPhase::FirstHalf,
        SessionPhase::Break,
        SessionPhase::SecondHalf,
        SessionPhase::Finished,
    ];

    pub fn next(self) -> Option<SessionPhase> {
        let i = Self::ORDER.iter().position(|p| *p == self)?;
        Self::ORDER.get(i + 1).copied()
    }

    /// Physics advances in this phase.
    pub fn is_active(self) -> bool {
        matches!(
            self,
            SessionPhase::Practice | SessionPhase::PreSession | SessionPhase::FirstHalf | SessionPhase::SecondHalf
        )
    }

    /// The human's transitions are buffered for adaptation in this phase.
    pub fn records_demo(self) -> bool {
        matches!(self, SessionPhase::PreSession | SessionPhase::FirstHalf | SessionPhase::SecondHalf)
    }

    pub fn counts_score(self) -> bool {
        matches!(self, SessionPhase::FirstHalf | SessionPhase::SecondHalf)
    }
}

/// Tick budgets per phase at 60 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LivePlan {
    /// `None` keeps practice going until the client says it is ready.
    pub practice_ticks: Option<u64>,
    pub pre_session_ticks: u64,
    pub half_ticks: u64,
    pub break_ticks: u64,
}

impl Default for LivePlan {
    fn default() -> Self {
        LivePlan { practice_ticks: None, pre_session_ticks: 3600, half_ticks: 7200, break_ticks: 600 }
    }
}

impl LivePlan {
    pub fn validate(&self) -> Result<()> {
        if self.pre_session_ticks == 0 || self.half_ticks == 0 {
            return Err(DdaError::config("pre-session and halves need at least one tick"));
        }
        Ok(())
    }

    fn budget(&self, phase: SessionPhase) -> Option<u64> {
        match phase {
            SessionPhase::Practice => self.practice_ticks,
            SessionPhase::PreSession => Some(self.pre_session_ticks),
            SessionPhase::Adapting => Some(0),
            SessionPhase::FirstHalf | SessionPhase::SecondHalf => Some(self.half_ticks),
            SessionPhase::Break => Some(self.break_ticks),
            SessionPhase::Finished => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptMode {
    /// Adaptation completes inside the triggering tick.
    Inline,
    /// Adaptation runs on a worker thread.
    Background,
}

/// Messages the server sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello { protocol: u32, method: String, seed: u64, tick_hz: f64 },
    Phase { tick: u64, phase: SessionPhase, ticks: Option<u64> },
    State { tick: u64, phase: SessionPhase, puck: [f64; 4], you: [f64; 2], opp: [f64; 2], score: [u32; 2] },
    Score { tick: u64, scorer: Scorer, score: [u32; 2] },
    Report(SessionReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    You,
    Opp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub method: String,
    pub goals_for: u32,
    pub goals_against: u32,
    pub possession_frac: f64,
    pub final_level: Option<u8>,
    pub dropped_inputs: u64,
    pub ticks: u64,
}

/// Messages the client sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        #[serde(default)]
        method: Option<String>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Input {
        tick: u64,
        target: [f64; 2],
    },
    /// Requests a phase change; only leaving practice is honored.
    Phase {
        phase: SessionPhase,
    },
}

pub const CLIENT_TYPES: [&str; 3] = ["hello", "input", "phase"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InboundError {
    /// A `type` the protocol does not define; the connection must close.
    UnknownType(String),
    /// Anything else wrong with the message; it is dropped and counted.
    Malformed(String),
}

pub fn parse_client_message(text: &str) -> std::result::Result<ClientMessage, InboundError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| InboundError::Malformed(e.to_string()))?;
    let kind = value
        .get("type")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| InboundError::Malformed("missing string field `type`".into()))?;
    if !CLIENT_TYPES.contains(&kind) {
        return Err(InboundError::UnknownType(kind.to_string()));
    }
    let msg: ClientMessage = serde_json::from_value(value).map_err(|e| InboundError::Malformed(e.to_string()))?;
    if let ClientMessage::Input { target, .. } = &msg {
        if !target.iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)) {
            return Err(InboundError::Malformed(format!("input target {target:?} outside [-1, 1]")));
        }
    }
    Ok(msg)
}

/// One active tick as seen by both players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub phase: SessionPhase,
    pub human: Action,
    pub opponent: Action,
}

type AdaptOutcome = (Box<dyn DdaMethod>, Result<Box<dyn OpponentPolicy>>);

pub struct LiveSession {
    plan: LivePlan,
    rink: RinkConfig,
    seed: u64,
    mode: AdaptMode,
    phase: SessionPhase,
    phase_ticks_left: Option<u64>,
    tick: u64,
    state: GameState,
    last_input: Action,
    dropped_inputs: u64,
    start_requested: bool,
    buffer: Trajectory,
    method: Option<Box<dyn DdaMethod>>,
    method_name: String,
    opponent: Box<dyn OpponentPolicy>,
    pending: Option<Receiver<AdaptOutcome>>,
    score_base: (u32, u32),
    possession_ticks: u64,
    scored_ticks: u64,
    history: Vec<TickRecord>,
    phases_seen: Vec<SessionPhase>,
}

impl LiveSession {
    pub fn new(
        plan: LivePlan,
        rink: RinkConfig,
        method: Box<dyn DdaMethod>,
        seed: u64,
        mode: AdaptMode,
    ) -> Result<Self> {
        plan.validate()?;
        rink.validate()?;
        let state = GameState::reset(&rink)?;
        let method_name = method.name().to_string();
        Ok(LiveSession {
            plan,
            rink,
            seed,
            mode,
            phase: SessionPhase::Practice,
            phase_ticks_left: plan.budget(SessionPhase::Practice),
            tick: 0,
            state,
            last_input: Action::ZERO,
            dropped_inputs: 0,
            start_requested: false,
            buffer: Trajectory::new("human", seed),
            method: Some(method),
            method_name,
            opponent: neutral_opponent(rink, seed, 0),
            pending: None,
            score_base: (0, 0),
            possession_ticks: 0,
            scored_ticks: 0,
            history: Vec::new(),
            phases_seen: vec![SessionPhase::Practice],
        })
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn buffer(&self) -> &Trajectory {
        &self.buffer
    }

    pub fn dropped_inputs(&self) -> u64 {
        self.dropped_inputs
    }

    pub fn history(&self) -> &[TickRecord] {
        &self.history
    }

    pub fn phases_seen(&self) -> &[SessionPhase] {
        &self.phases_seen
    }

    pub fn method_name(&self) -> &str {
        &self.method_name
    }

    pub fn adaptation_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Current ladder level, if the method has one and is not mid-adaptation.
    pub fn level(&self) -> Option<DifficultyLevel> {
        self.method.as_ref().and_then(|m| m.level())
    }

    pub fn tick_hz(&self) -> f64 {
        self.rink.tick_hz()
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::Hello {
            protocol: PROTOCOL_VERSION,
            method: self.method_name.clone(),
            seed: self.seed,
            tick_hz: self.tick_hz(),
        }
    }

    /// Counts an input the transport had to drop.
    pub fn note_dropped_input(&mut self) {
        self.dropped_inputs += 1;
    }

    /// Applies a parsed client message that is not a per-tick input.
    pub fn request_phase(&mut self, phase: SessionPhase) {
        if self.phase == SessionPhase::Practice && phase == SessionPhase::PreSession {
            self.start_requested = true;
        } else {
            log::debug!("ignoring phase request {phase:?} during {:?}", self.phase);
        }
    }

    /// Advances one tick. Missing input repeats the last accepted one;
    /// non-finite input is dropped and counted.
    pub fn advance_tick(&mut self, human_input: Option<Action>) -> Result<Vec<ServerMessage>> {
        if self.phase == SessionPhase::Finished {
            return Err(DdaError::Protocol("session already finished".into()));
        }
        let mut out = Vec::new();
        self.poll_adaptation(false);
        match human_input {
            Some(a) if a.is_finite() => self.last_input = Action::new(a.x, a.y),
            Some(_) => self.dropped_inputs += 1,
            None => {}
        }

        if self.phase.is_active() {
            let obs_a = self.state.observe(Side::A, &self.rink);
            let human = self.last_input;
            let opponent = self.opponent.act(&self.state.observe(Side::B, &self.rink));
            let (next, events) = self.state.step(human, opponent, &self.rink)?;
            self.state = next;
            if self.phase.records_demo() {
                self.buffer.push(obs_a, human);
            }
            if self.phase.counts_score() {
                self.scored_ticks += 1;
                if self.state.possession(&self.rink) == Side::A {
                    self.possession_ticks += 1;
                }
            }
            self.history.push(TickRecord { tick: self.tick, phase: self.phase, human, opponent });
            if let Some(side) = events.goal_scored {
                let scorer = if side == Side::A { Scorer::You } else { Scorer::Opp };
                out.push(ServerMessage::Score { tick: self.tick, scorer, score: self.phase_score() });
            }
        }
        out.push(self.state_message());

        if let Some(left) = self.phase_ticks_left.as_mut() {
            *left = left.saturating_sub(1);
        }
        self.tick += 1;
        self.maybe_transition(&mut out)?;
        Ok(out)
    }

    fn phase_score(&self) -> [u32; 2] {
        [self.state.score_a - self.score_base.0, self.state.score_b - self.score_base.1]
    }

    pub fn state_message(&self) -> ServerMessage {
        let s = &self.state;
        ServerMessage::State {
            tick: self.tick,
            phase: self.phase,
            puck: [s.puck.pos.x, s.puck.pos.y, s.puck.vel.x, s.puck.vel.y],
            you: [s.striker_a.pos.x, s.striker_a.pos.y],
            opp: [s.striker_b.pos.x, s.striker_b.pos.y],
            score: self.phase_score(),
        }
    }

    fn maybe_transition(&mut self, out: &mut Vec<ServerMessage>) -> Result<()> {
        loop {
            let expired = match self.phase {
                SessionPhase::Practice => self.start_requested || self.phase_ticks_left == Some(0),
                SessionPhase::Adapting | SessionPhase::Break => {
                    self.poll_adaptation(false);
                    self.phase_ticks_left == Some(0) && self.pending.is_none()
                }
                SessionPhase::Finished => false,
                _ => self.phase_ticks_left == Some(0),
            };
            if !expired {
                return Ok(());
            }
            let next = self.phase.next().expect("finished never expires");
            self.enter(next)?;
            out.push(ServerMessage::Phase { tick: self.tick, phase: next, ticks: self.phase_ticks_left });
            if next == SessionPhase::Finished {
                out.push(ServerMessage::Report(self.report()));
                return Ok(());
            }
        }
    }

    fn enter(&mut self, next: SessionPhase) -> Result<()> {
        let leaving = self.phase;
        self.phase = next;
        self.phase_ticks_left = self.plan.budget(next);
        self.phases_seen.push(next);
        match next {
            SessionPhase::PreSession => {
                self.state = GameState::reset(&self.rink)?;
                self.opponent = neutral_opponent(self.rink, self.seed, 1);
                self.buffer = Trajectory::new("human", self.seed);
            }
            SessionPhase::Adapting => {
                let (gf, ga) = (self.state.score_a, self.state.score_b);
                self.trigger_adaptation(AdjustPoint::Initial, gf, ga)?;
            }
            SessionPhase::FirstHalf => {
                self.state = GameState::reset(&self.rink)?;
                self.score_base = (0, 0);
                self.buffer = Trajectory::new("human", self.seed);
            }
            SessionPhase::Break => {
                let [gf, ga] = self.phase_score();
                self.trigger_adaptation(AdjustPoint::Midpoint, gf, ga)?;
            }
            SessionPhase::SecondHalf => {
                self.buffer = Trajectory::new("human", self.seed);
            }
            SessionPhase::Practice | SessionPhase::Finished => {}
        }
        log::debug!("tick {}: {leaving:?} -> {next:?}", self.tick);
        Ok(())
    }

    /// Starts an adjustment from the buffered demo. Only legal while the
    /// session is frozen in `adapting` or `break`.
    fn trigger_adaptation(&mut self, point: AdjustPoint, goals_for: u32, goals_against: u32) -> Result<()> {
        if !matches!(self.phase, SessionPhase::Adapting | SessionPhase::Break) {
            return Err(DdaError::Protocol(format!("adaptation requested during {:?}", self.phase)));
        }
        let mut method = self.method.take().ok_or_else(|| DdaError::Protocol("adaptation already running".into()))?;
        if self.buffer.is_empty() {
            log::warn!("empty demo buffer at {point:?}; the method falls back to its unadapted policy");
        }
        let buffer = std::mem::replace(&mut self.buffer, Trajectory::new("human", self.seed));
        let run = move |method: &mut Box<dyn DdaMethod>| {
            method.adjust(&AdjustmentEvidence { trajectory: &buffer, goals_for, goals_against, point })
        };
        match self.mode {
            AdaptMode::Inline => {
                let result = run(&mut method);
                self.install(method, result);
            }
            AdaptMode::Background => {
                let (tx, rx) = mpsc::channel();
                thread::spawn(move || {
                    let result = run(&mut method);
                    let _ = tx.send((method, result));
                });
                self.pending = Some(rx);
            }
        }
        Ok(())
    }

    fn install(&mut self, method: Box<dyn DdaMethod>, result: Result<Box<dyn OpponentPolicy>>) {
        self.opponent = match result {
            Ok(policy) => policy,
            Err(e) => {
                log::error!("adaptation failed ({e}); using the method's fallback policy");
                method.fallback()
            }
        };
        self.method = Some(method);
    }

    /// Installs a finished background adaptation. With `block` set, waits
    /// for it.
    fn poll_adaptation(&mut self, block: bool) {
        let Some(rx) = self.pending.as_ref() else { return };
        let received = if block { rx.recv().map_err(|_| TryRecvError::Disconnected) } else { rx.try_recv() };
        match received {
            Ok((method, result)) => {
                self.pending = None;
                self.install(method, result);
            }
            Err(TryRecvError::Empty) => {}
            Err(TryRecvError::Disconnected) => {
                // The worker panicked; the method went with it.
                log::error!("adaptation worker vanished; the session keeps its current opponent");
                self.pending = None;
            }
        }
    }

    /// Blocks until a running adaptation has been installed.
    pub fn wait_for_adaptation(&mut self) {
        self.poll_adaptation(true);
    }

    pub fn report(&self) -> SessionReport {
        SessionReport {
            method: self.method_name.clone(),
            goals_for: self.state.score_a - self.score_base.0,
            goals_against: self.state.score_b - self.score_base.1,
            possession_frac: if self.scored_ticks == 0 {
                0.0
            } else {
                self.possession_ticks as f64 / self.scored_ticks as f64
            },
            final_level: self.level().map(DifficultyLevel::get),
            dropped_inputs: self.dropped_inputs,
            ticks: self.tick,
        }
    }
}

fn neutral_opponent(rink: RinkConfig, seed: u64, stream: u64) -> Box<dyn OpponentPolicy> {
    let arch = level_to_archetype(DifficultyLevel::NEUTRAL);
    Box::new(ScriptedPolicy(ScriptedPlayer::new(arch, rink, stream_seed(seed, 100 + stream))))
}

/// Outcome of re-running a recorded session offline.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayCheck {
    pub compared: usize,
    /// First record whose opponent action differed, if any.
    pub first_mismatch: Option<usize>,
}

/// Re-drives a fresh inline session with the recorded human actions and
/// checks that every opponent action comes out the same. Frozen ticks are
/// skipped, so a background-mode recording replays too.
pub fn replay_session(
    records: &[TickRecord],
    plan: LivePlan,
    rink: RinkConfig,
    method: Box<dyn DdaMethod>,
    seed: u64,
) -> Result<ReplayCheck> {
    let mut session = LiveSession::new(plan, rink, method, seed, AdaptMode::Inline)?;
    let practice_len = records.iter().take_while(|r| r.phase == SessionPhase::Practice).count();
    let mut practice_done = 0;
    let mut compared = 0;
    for (i, record) in records.iter().enumerate() {
        while !session.phase().is_active() {
            if session.phase() == SessionPhase::Finished {
                return Ok(ReplayCheck { compared, first_mismatch: Some(i) });
            }
            session.advance_tick(None)?;
        }
        if session.phase() == SessionPhase::Practice {
            practice_done += 1;
            if practice_done == practice_len && plan.practice_ticks.is_none() {
                session.request_phase(SessionPhase::PreSession);
            }
        }
        session.advance_tick(Some(record.human))?;
        let replayed = session.history.last().expect("active tick records");
        compared += 1;
        if replayed.phase != record.phase || replayed.opponent != record.opponent {
            return Ok(ReplayCheck { compared, first_mismatch: Some(i) });
        }
    }
    Ok(ReplayCheck { compared, first_mismatch: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::{FixedLevel, Ladder};

    fn small_plan() -> LivePlan {
        LivePlan { practice_ticks: None, pre_session_ticks: 120, half_ticks: 240, break_ticks: 30 }
    }

    fn ladder_session(mode: AdaptMode) -> LiveSession {
        let rink = RinkConfig::default();
        let method = Box::new(Ladder::new(DifficultyLevel::NEUTRAL, rink, 1));
        LiveSession::new(small_plan(), rink, method, 7, mode).unwrap()
    }

    fn run_to_end(session: &mut LiveSession, practice: u64) -> Vec<ServerMessage> {
        let mut all = Vec::new();
        for i in 0..practice {
            all.extend(session.advance_tick(Some(Action::new(0.1, 0.2))).unwrap());
            if i + 1 == practice {
                session.request_phase(SessionPhase::PreSession);
            }
        }
        let mut guard = 0;
        while session.phase() != SessionPhase::Finished {
            let t = session.tick() as f64;
            all.extend(session.advance_tick(Some(Action::new((t * 0.05).sin(), (t * 0.03).cos()))).unwrap());
            guard += 1;
            assert!(guard < 100_000, "session never finished");
        }
        all
    }

    #[test]
    fn phase_order() {
        assert_eq!(SessionPhase::Practice.next(), Some(SessionPhase::PreSession));
        assert_eq!(SessionPhase::SecondHalf.next(), Some(SessionPhase::Finished));
        assert_eq!(SessionPhase::Finished.next(), None);
        assert_eq!(serde_json::to_string(&SessionPhase::Break).unwrap(), "\"break\"");
    }

    #[test]
    fn full_session_follows_legal_order() {
        let mut s = ladder_session(AdaptMode::Inline);
        let msgs = run_to_end(&mut s, 10);
        assert_eq!(s.phases_seen(), SessionPhase::ORDER);
        let phases: Vec<SessionPhase> = msgs
            .iter()
            .filter_map(|m| match m {
                ServerMessage::Phase { phase, .. } => Some(*phase),
                _ => None,
            })
            .collect();
        assert_eq!(phases, SessionPhase::ORDER[1..]);
        assert!(matches!(msgs.last(), Some(ServerMessage::Report(_))));
        assert!(s.advance_tick(None).is_err());
    }

    #[test]
    fn practice_waits_for_ready() {
        let mut s = ladder_session(AdaptMode::Inline);
        for _ in 0..500 {
            s.advance_tick(None).unwrap();
        }
        assert_eq!(s.phase(), SessionPhase::Practice);
        assert!(s.buffer().is_empty());
        s.request_phase(SessionPhase::Finished);
        s.advance_tick(None).unwrap();
        assert_eq!(s.phase(), SessionPhase::Practice);
        s.request_phase(SessionPhase::PreSession);
        s.advance_tick(None).unwrap();
        assert_eq!(s.phase(), SessionPhase::PreSession);
    }

    #[test]
    fn pre_session_fills_buffer_exactly() {
        let mut s = ladder_session(AdaptMode::Background);
        s.request_phase(SessionPhase::PreSession);
        s.advance_tick(None).unwrap();
        for _ in 0..119 {
            s.advance_tick(Some(Action::new(0.3, 0.3))).unwrap();
        }
        assert_eq!(s.phase(), SessionPhase::PreSession);
        assert_eq!(s.buffer().len(), 119);
        s.advance_tick(None).unwrap();
        // The last pre-session tick hands the 120 transitions to the method.
        assert_ne!(s.phase(), SessionPhase::PreSession);
        assert!(s.buffer().is_empty());
    }

    #[test]
    fn break_is_frozen() {
        let mut s = ladder_session(AdaptMode::Inline);
        s.request_phase(SessionPhase::PreSession);
        while s.phase() != SessionPhase::Break {
            s.advance_tick(Some(Action::new(0.0, 0.5))).unwrap();
        }
        let frozen = *s.state();
        for _ in 0..29 {
            s.advance_tick(Some(Action::new(1.0, 1.0))).unwrap();
            assert_eq!(*s.state(), frozen);
        }
        s.advance_tick(None).unwrap();
        assert_eq!(s.phase(), SessionPhase::SecondHalf);
    }

    #[test]
    fn bad_input_is_dropped_and_held() {
        let mut s = ladder_session(AdaptMode::Inline);
        s.advance_tick(Some(Action::new(0.5, 0.5))).unwrap();
        s.advance_tick(Some(Action { x: f64::NAN, y: 0.0 })).unwrap();
        assert_eq!(s.dropped_inputs(), 1);
        assert_eq!(s.history().last().unwrap().human, Action::new(0.5, 0.5));
        s.advance_tick(None).unwrap();
        assert_eq!(s.history().last().unwrap().human, Action::new(0.5, 0.5));
    }

    #[test]
    fn parse_rules() {
        assert!(matches!(
            parse_client_message(r#"{"type":"input","tick":3,"target":[0.5,-1]}"#),
            Ok(ClientMessage::Input { .. })
        ));
        assert_eq!(
            parse_client_message(r#"{"type":"chat","text":"hi"}"#),
            Err(InboundError::UnknownType("chat".into()))
        );
        assert!(matches!(
            parse_client_message(r#"{"type":"input","tick":3,"target":[2,0]}"#),
            Err(InboundError::Malformed(_))
        ));
        assert!(matches!(parse_client_message(r#"{"type":"input","tick":3}"#), Err(InboundError::Malformed(_))));
        assert!(matches!(parse_client_message("not json"), Err(InboundError::Malformed(_))));
        assert!(matches!(parse_client_message(r#"{"tick":1}"#), Err(InboundError::Malformed(_))));
        assert!(matches!(
            parse_client_message(r#"{"type":"hello"}"#),
            Ok(ClientMessage::Hello { method: None, seed: None })
        ));
        assert!(matches!(
            parse_client_message(r#"{"type":"phase","phase":"pre_session"}"#),
            Ok(ClientMessage::Phase { phase: SessionPhase::PreSession })
        ));
    }

    #[test]
    fn state_message_shape() {
        let s = ladder_session(AdaptMode::Inline);
        let v = serde_json::to_value(s.state_message()).unwrap();
        assert_eq!(v["type"], "state");
        assert_eq!(v["phase"], "practice");
        assert_eq!(v["puck"].as_array().unwrap().len(), 4);
        assert_eq!(v["you"].as_array().unwrap().len(), 2);
        assert_eq!(v["score"], serde_json::json!([0, 0]));
    }

    #[test]
    fn background_replays_like_inline() {
        let mut s = ladder_session(AdaptMode::Background);
        run_to_end(&mut s, 25);
        let rink = RinkConfig::default();
        let method = Box::new(Ladder::new(DifficultyLevel::NEUTRAL, rink, 1));
        let check = replay_session(s.history(), small_plan(), rink, method, 7).unwrap();
        assert_eq!(check.first_mismatch, None);
        assert_eq!(check.compared, s.history().len());

        // A different method seed diverges.
        let other = Box::new(FixedLevel::new(DifficultyLevel::MAX, rink, 1));
        let check = replay_session(s.history(), small_plan(), rink, other, 7).unwrap();
        assert!(check.first_mismatch.is_some());
    }
}
