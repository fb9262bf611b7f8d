//! Self-describing checkpoint container shared by every trained model kind.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{MfModel, NeighborhoodModel};
use crate::error::{Error, Result};
use crate::model::{NsnmfModel, Predictor};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum CheckpointPayload {
    Nsnmf(NsnmfModel),
    Mf(MfModel),
    Neighborhood(NeighborhoodModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub payload: CheckpointPayload,
}

impl Checkpoint {
    pub fn new(payload: CheckpointPayload) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            payload,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let checkpoint: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if checkpoint.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported checkpoint format version {}",
                path.display(),
                checkpoint.format_version
            )));
        }
        Ok(checkpoint)
    }
}

impl Predictor for CheckpointPayload {
    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        match self {
            CheckpointPayload::Nsnmf(m) => m.predict(user, item),
            CheckpointPayload::Mf(m) => m.predict(user, item),
            CheckpointPayload::Neighborhood(m) => m.predict(user, item),
        }
    }
}
