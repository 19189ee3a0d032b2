//! JSON checkpoint envelope.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layout::{LayerSpec, Layout, ParamVector};
use crate::error::{DdaError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub created_by: String,
    #[serde(default)]
    pub training_config: serde_json::Value,
}

impl CheckpointMeta {
    pub fn new(seed: u64, training_config: serde_json::Value) -> Self {
        CheckpointMeta {
            seed,
            created_by: concat!("dda-core ", env!("CARGO_PKG_VERSION")).to_string(),
            training_config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub layout: Vec<LayerSpec>,
    pub values: Vec<f64>,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn from_params(params: &ParamVector, meta: CheckpointMeta) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            layout: params.layout().layers().to_vec(),
            values: params.values().to_vec(),
            meta,
        }
    }

    pub fn into_params(self) -> Result<ParamVector> {
        check_version(self.format_version)?;
        to_params(self.layout, self.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

pub(crate) fn check_version(version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(DdaError::Checkpoint(format!("unsupported format_version {version}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

pub(crate) fn to_params(layers: Vec<LayerSpec>, values: Vec<f64>) -> Result<ParamVector> {
    let layout = Layout::new(layers)?;
    if layout.param_count() != values.len() {
        return Err(DdaError::Checkpoint(format!(
            "layout implies {} values but the file holds {}",
            layout.param_count(),
            values.len()
        )));
    }
    ParamVector::new(layout, values)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)?;
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| DdaError::Asset(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}
