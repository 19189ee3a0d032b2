use thiserror::Error;

pub type Result<T, E = DdaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DdaError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite game state: {0}")]
    NumericState(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("split would leave an empty part ({len} transitions, fraction {fraction})")]
    EmptySplit { len: usize, fraction: f64 },
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("missing asset: {0}")]
    Asset(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DdaError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        DdaError::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        DdaError::Config(msg.into())
    }
}
