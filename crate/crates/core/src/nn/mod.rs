//! Tiny differentiable networks: fully connected and LSTM passes, optimizers,
//! a finite-difference oracle and the checkpoint format.

pub mod checkpoint;
pub mod gradcheck;
pub mod layout;
pub mod lstm;
pub mod mlp;
pub mod optim;
pub mod real;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use gradcheck::{finite_diff_grad, finite_diff_raw, max_relative_error};
pub use layout::{Activation, GradVector, LayerKind, LayerSpec, Layout, ParamVector};
pub use lstm::{lstm_backward, lstm_forward, LstmCache};
pub use mlp::{mlp_backward, mlp_forward, mlp_predict, MlpCache};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use real::{Dual, Real};
