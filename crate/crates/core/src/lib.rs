//! Dynamic difficulty adjustment for a two-player air-hockey table.
//!
//! A behavior-cloning policy is meta-trained across a population of players
//! so that a few gradient steps on a short demo clone a new player. It is
//! compared with an LSTM embedding network and a 1–9 difficulty ladder.

pub mod baselines;
pub mod config;
pub mod error;
pub mod eval;
pub mod live;
pub mod meta;
pub mod methods;
pub mod nn;
pub mod pipeline;
pub mod players;
pub mod rink;
pub mod trajectory;

pub use error::{DdaError, Result};
