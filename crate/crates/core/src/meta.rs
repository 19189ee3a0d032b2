//! Per-player meta-learning of a behavior-cloning policy.
//!
//! Each player is a task. The inner loop takes `m` full-batch gradient steps
//! on the player's demo; the outer loop minimizes the summed validation loss
//! of the adapted parameters. In second-order mode the outer gradient is
//! carried back through every inner step with Hessian-vector products
//! computed forward-over-reverse (dual numbers through the reverse pass).

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};
use crate::nn::mlp::{backward_raw, forward_raw};
use crate::nn::{Dual, GradVector, LayerKind, Layout, OptimizerConfig, OptimizerState, ParamVector, Real};
use crate::rink::{ACTION_DIM, OBS_DIM};
use crate::trajectory::{split_demo, DemoSplit, Trajectory, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    SecondOrder,
    FirstOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaConfig {
    /// Inner step size.
    pub alpha: f64,
    /// Inner steps during meta-training.
    pub inner_steps: usize,
    /// Inner steps when adapting to a new player.
    pub adapt_inner_steps: usize,
    pub meta_batch_size: usize,
    pub grad_mode: GradMode,
    pub outer: OptimizerConfig,
    pub iterations: usize,
    pub hidden_widths: Vec<usize>,
    /// Length of the contiguous window each sampled task is cut from.
    pub task_window: usize,
    pub demo_fraction: f64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            alpha: 0.01,
            inner_steps: 1,
            adapt_inner_steps: 5,
            meta_batch_size: 8,
            grad_mode: GradMode::SecondOrder,
            outer: OptimizerConfig { lr: 3e-3, ..OptimizerConfig::default() },
            iterations: 1000,
            hidden_widths: vec![80, 80, 80],
            task_window: 512,
            demo_fraction: 0.5,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(DdaError::config(format!("alpha must be a non-negative number, got {}", self.alpha)));
        }
        if self.meta_batch_size == 0 {
            return Err(DdaError::config("meta_batch_size must be at least 1"));
        }
        if self.task_window < 2 {
            return Err(DdaError::config("task_window must hold at least two transitions"));
        }
        if !(self.outer.lr.is_finite() && self.outer.lr > 0.0) {
            return Err(DdaError::config("outer learning rate must be positive"));
        }
        Ok(())
    }

    pub fn policy_layout(&self) -> Result<Layout> {
        policy_layout(&self.hidden_widths)
    }
}

/// `8 -> hidden... -> 2`, tanh throughout so actions land in `[-1, 1]`.
pub fn policy_layout(hidden_widths: &[usize]) -> Result<Layout> {
    Layout::mlp(OBS_DIM, hidden_widths, ACTION_DIM)
}

/// A twice-differentiable loss over a flat parameter vector.
pub trait TaskLoss: Sync {
    fn loss(&self, theta: &[f64]) -> Result<f64>;
    fn loss_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Hessian of the loss at `theta` applied to `v`.
    fn hvp(&self, theta: &[f64], v: &[f64]) -> Result<Vec<f64>>;
}

/// Mean squared action error of a fully connected policy on a trajectory.
pub struct BcLoss<'a> {
    pub layout: &'a Layout,
    pub data: &'a [Transition],
}

impl<'a> BcLoss<'a> {
    pub fn new(layout: &'a Layout, data: &'a [Transition]) -> Result<Self> {
        if data.is_empty() {
            return Err(DdaError::EmptyInput("behavior cloning data"));
        }
        if layout.input_dim() != OBS_DIM || layout.output_dim() != ACTION_DIM {
            return Err(DdaError::shape("policy must map 8 observations to 2 actions"));
        }
        Ok(BcLoss { layout, data })
    }

    fn value_and_grad<T: Real>(&self, theta: &[T]) -> Result<(T, Vec<T>)> {
        let n = self.data.len() as f64;
        let mut grad = vec![T::zero(); theta.len()];
        let mut total = T::zero();
        let mut input = [T::zero(); OBS_DIM];
        for t in self.data {
            for (dst, &src) in input.iter_mut().zip(&t.observation.0) {
                *dst = T::from_f64(src);
            }
            let cache = forward_raw(self.layout, theta, &input)?;
            let out = cache.output();
            let d0 = out[0] - T::from_f64(t.action.x);
            let d1 = out[1] - T::from_f64(t.action.y);
            total += d0 * d0 + d1 * d1;
            backward_raw(self.layout, theta, &cache, &[d0.scale(1.0 / n), d1.scale(1.0 / n)], &mut grad)?;
        }
        Ok((total.scale(0.5 / n), grad))
    }
}

impl TaskLoss for BcLoss<'_> {
    fn loss(&self, theta: &[f64]) -> Result<f64> {
        let n = self.data.len() as f64;
        let mut total = 0.0;
        for t in self.data {
            let out = forward_raw(self.layout, theta, &t.observation.0)?;
            let out = out.output();
            total += (out[0] - t.action.x).powi(2) + (out[1] - t.action.y).powi(2);
        }
        Ok(total * 0.5 / n)
    }

    fn loss_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.value_and_grad(theta)
    }

    fn hvp(&self, theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if self.layout.layers().iter().any(|l| l.kind == LayerKind::Lstm) {
            return Err(DdaError::UnsupportedMode("Hessian-vector products need a fully connected policy".into()));
        }
        let dual: Vec<Dual> = theta.iter().zip(v).map(|(&t, &d)| Dual::new(t, d)).collect();
        let (_, g) = self.value_and_grad(&dual)?;
        Ok(g.into_iter().map(|d| d.tan).collect())
    }
}

/// `½(θ − center)²` in one dimension; a closed-form stand-in for a task loss.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticLoss {
    pub center: f64,
}

impl TaskLoss for QuadraticLoss {
    fn loss(&self, theta: &[f64]) -> Result<f64> {
        Ok(0.5 * (theta[0] - self.center).powi(2))
    }

    fn loss_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.loss(theta)?, vec![theta[0] - self.center]))
    }

    fn hvp(&self, _theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![v[0]])
    }
}

pub struct MetaTask<L> {
    pub demo: L,
    pub valid: L,
}

/// `m` steps of `θ ← θ − α∇L(θ)`. Returns the whole path, `θ_0 ..= θ_m`.
fn inner_path<L: TaskLoss>(theta: &[f64], loss: &L, alpha: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    let mut path = Vec::with_capacity(m + 1);
    path.push(theta.to_vec());
    if alpha == 0.0 {
        return Ok(path);
    }
    for _ in 0..m {
        let current = path.last().expect("path starts non-empty");
        let (_, g) = loss.loss_grad(current)?;
        path.push(current.iter().zip(&g).map(|(t, gi)| t - alpha * gi).collect());
    }
    Ok(path)
}

pub fn inner_adapt_raw<L: TaskLoss>(theta: &[f64], loss: &L, alpha: f64, m: usize) -> Result<Vec<f64>> {
    Ok(inner_path(theta, loss, alpha, m)?.pop().expect("path starts non-empty"))
}

/// Objective value and its gradient for one task.
fn task_meta_gradient<L: TaskLoss>(
    theta: &[f64],
    task: &MetaTask<L>,
    alpha: f64,
    m: usize,
    mode: GradMode,
) -> Result<(f64, Vec<f64>)> {
    let path = inner_path(theta, &task.demo, alpha, m)?;
    let adapted = path.last().expect("path starts non-empty");
    let (value, mut u) = task.valid.loss_grad(adapted)?;
    if mode == GradMode::SecondOrder {
        // u_k = (I − αH(θ_k)) u_{k+1}
        for k in (0..path.len() - 1).rev() {
            let hv = task.demo.hvp(&path[k], &u)?;
            for (ui, h) in u.iter_mut().zip(&hv) {
                *ui -= alpha * h;
            }
        }
    }
    Ok((value, u))
}

pub fn meta_objective_raw<L: TaskLoss>(theta: &[f64], tasks: &[MetaTask<L>], alpha: f64, m: usize) -> Result<f64> {
    if tasks.is_empty() {
        return Err(DdaError::EmptyInput("meta batch"));
    }
    let mut total = 0.0;
    for task in tasks {
        let adapted = inner_adapt_raw(theta, &task.demo, alpha, m)?;
        total += task.valid.loss(&adapted)?;
    }
    Ok(total)
}

/// Tasks are evaluated in parallel and summed in batch order.
pub fn meta_gradient_raw<L: TaskLoss>(
    theta: &[f64],
    tasks: &[MetaTask<L>],
    alpha: f64,
    m: usize,
    mode: GradMode,
) -> Result<(f64, Vec<f64>)> {
    if tasks.is_empty() {
        return Err(DdaError::EmptyInput("meta batch"));
    }
    let per_task: Vec<(f64, Vec<f64>)> =
        tasks.par_iter().map(|task| task_meta_gradient(theta, task, alpha, m, mode)).collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for (value, g) in &per_task {
        total += value;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    Ok((total, grad))
}

pub fn bc_loss(params: &ParamVector, data: &Trajectory) -> Result<f64> {
    BcLoss::new(params.layout(), &data.transitions)?.loss(params.values())
}

pub fn bc_loss_grad(params: &ParamVector, data: &Trajectory) -> Result<(f64, GradVector)> {
    let (value, values) = BcLoss::new(params.layout(), &data.transitions)?.loss_grad(params.values())?;
    Ok((value, GradVector { values }))
}

pub fn inner_adapt(params: &ParamVector, demo: &Trajectory, alpha: f64, m: usize) -> Result<ParamVector> {
    if m == 0 || alpha == 0.0 {
        return Ok(params.clone());
    }
    let loss = BcLoss::new(params.layout(), &demo.transitions)?;
    params.with_values(inner_adapt_raw(params.values(), &loss, alpha, m)?)
}

fn bc_tasks<'a>(layout: &'a Layout, batch: &'a [DemoSplit]) -> Result<Vec<MetaTask<BcLoss<'a>>>> {
    batch
        .iter()
        .map(|s| {
            Ok(MetaTask {
                demo: BcLoss::new(layout, &s.demo.transitions)?,
                valid: BcLoss::new(layout, &s.valid.transitions)?,
            })
        })
        .collect()
}

pub fn meta_objective(params: &ParamVector, batch: &[DemoSplit], cfg: &MetaConfig) -> Result<f64> {
    let tasks = bc_tasks(params.layout(), batch)?;
    meta_objective_raw(params.values(), &tasks, cfg.alpha, cfg.inner_steps)
}

/// Gradient of [`meta_objective`] together with the objective value.
pub fn meta_gradient(params: &ParamVector, batch: &[DemoSplit], cfg: &MetaConfig) -> Result<(f64, GradVector)> {
    if cfg.grad_mode == GradMode::SecondOrder && params.layout().has_lstm() {
        return Err(DdaError::UnsupportedMode("second-order meta-gradients require a fully connected layout".into()));
    }
    let tasks = bc_tasks(params.layout(), batch)?;
    let (value, values) = meta_gradient_raw(params.values(), &tasks, cfg.alpha, cfg.inner_steps, cfg.grad_mode)?;
    Ok((value, GradVector { values }))
}

/// Deployment-time adaptation to one player's demo.
pub fn adapt_to_player(meta_params: &ParamVector, demo: &Trajectory, cfg: &MetaConfig) -> Result<ParamVector> {
    if demo.is_empty() {
        return Err(DdaError::EmptyInput("player demo"));
    }
    inner_adapt(meta_params, demo, cfg.alpha, cfg.adapt_inner_steps)
}

/// Seeded source of task batches.
pub trait TaskSampler {
    fn sample_batch(&mut self, batch_size: usize) -> Result<Vec<DemoSplit>>;
}

/// Draws distinct players and cuts a random contiguous window from each,
/// split into demo and validation halves.
pub struct WindowSampler {
    trajectories: Vec<Trajectory>,
    window: usize,
    demo_fraction: f64,
    rng: ChaCha8Rng,
}

impl WindowSampler {
    pub fn new(trajectories: Vec<Trajectory>, window: usize, demo_fraction: f64, seed: u64) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(DdaError::EmptyInput("training population"));
        }
        if trajectories.iter().any(|t| t.len() < 2) {
            return Err(DdaError::config("every training trajectory needs at least two transitions"));
        }
        Ok(WindowSampler { trajectories, window, demo_fraction, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    fn window_of(&mut self, player: usize) -> Result<DemoSplit> {
        let traj = &self.trajectories[player];
        let len = self.window.min(traj.len());
        let start = self.rng.random_range(0..=traj.len() - len);
        split_demo(&traj.slice(start, start + len), self.demo_fraction)
    }
}

impl TaskSampler for WindowSampler {
    fn sample_batch(&mut self, batch_size: usize) -> Result<Vec<DemoSplit>> {
        let n = self.trajectories.len();
        let players: Vec<usize> = if batch_size <= n {
            sample_indices(&mut self.rng, n, batch_size).into_vec()
        } else {
            (0..batch_size).map(|_| self.rng.random_range(0..n)).collect()
        };
        players.into_iter().map(|p| self.window_of(p)).collect()
    }
}

/// One outer iteration, as written to the JSON-lines training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub meta_objective: f64,
    pub grad_norm: f64,
    pub wall_ms: f64,
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MetaTrainOutcome {
    pub params: ParamVector,
    pub log: Vec<IterationRecord>,
}

pub fn meta_train(cfg: &MetaConfig, sampler: &mut dyn TaskSampler, init_seed: u64) -> Result<MetaTrainOutcome> {
    cfg.validate()?;
    let layout = cfg.policy_layout()?;
    let mut params = ParamVector::init(&layout, init_seed);
    let mut opt = OptimizerState::new(cfg.outer, params.len());
    let mut log = Vec::with_capacity(cfg.iterations);
    for iter in 0..cfg.iterations {
        let started = Instant::now();
        let batch = sampler.sample_batch(cfg.meta_batch_size)?;
        let (objective, grad) = meta_gradient(&params, &batch, cfg)?;
        let grad_norm = grad.norm();
        if !(objective.is_finite() && grad_norm.is_finite()) {
            return Err(DdaError::Numeric(format!(
                "meta-training diverged at iteration {iter}: objective {objective}, gradient norm {grad_norm}"
            )));
        }
        opt.step(&mut params, &grad)?;
        log.push(IterationRecord {
            iter,
            meta_objective: objective,
            grad_norm,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(MetaTrainOutcome { params, log })
}
