use serde::{Deserialize, Serialize};

use super::layout::{GradVector, ParamVector};
use crate::error::{DdaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    AdaptiveMoments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::AdaptiveMoments, lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig { kind: OptimizerKind::Sgd, lr, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    pub steps: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, len: usize) -> Self {
        let buffers = match config.kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::AdaptiveMoments => len,
        };
        OptimizerState { config, m: vec![0.0; buffers], v: vec![0.0; buffers], steps: 0 }
    }

    /// Applies one update in place.
    pub fn step_raw(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(DdaError::shape(format!("{} parameters vs {} gradients", params.len(), grads.len())));
        }
        let c = self.config;
        self.steps += 1;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= c.lr * g;
                }
            }
            OptimizerKind::AdaptiveMoments => {
                if self.m.len() != params.len() {
                    return Err(DdaError::shape("moment buffers do not match the parameters"));
                }
                let t = self.steps as i32;
                let bc1 = 1.0 - c.beta1.powi(t);
                let bc2 = 1.0 - c.beta2.powi(t);
                for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                }
            }
        }
        Ok(())
    }

    pub fn step(&mut self, params: &mut ParamVector, grads: &GradVector) -> Result<()> {
        grads.check_matches(params)?;
        self.step_raw(params.values_mut(), &grads.values)?;
        if params.values().iter().any(|v| !v.is_finite()) {
            return Err(DdaError::Numeric(format!("optimizer step {} produced non-finite parameters", self.steps)));
        }
        Ok(())
    }
}
