//! Trained-model files: parameters plus everything needed to check that a
//! dataset was scaled the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{Model, ModelConfig, ModelKind};
use crate::preprocess::{MinMaxScaler, WindowedDataset};
use crate::training::OptimizerConfig;

pub const CHECKPOINT_FORMAT: &str = "qklstm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model_config: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub columns: Vec<String>,
    pub target_column: usize,
    pub scaler: MinMaxScaler,
    pub scaler_fingerprint: String,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(model: Model, model_config: ModelConfig, optimizer: OptimizerConfig, data: &WindowedDataset) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model_config,
            seed: optimizer.seed,
            optimizer,
            columns: data.scaler.columns.clone(),
            target_column: data.target_column,
            scaler_fingerprint: data.scaler.fingerprint(),
            scaler: data.scaler.clone(),
            model,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    /// Refuses datasets scaled with a different scaler or laid out
    /// differently.
    pub fn check_dataset(&self, data: &WindowedDataset) -> Result<()> {
        let fp = data.scaler.fingerprint();
        if fp != self.scaler_fingerprint {
            return Err(Error::Incompatible(format!(
                "dataset scaler {} does not match the checkpoint's scaler {}; \
                 the dataset was preprocessed differently from the training data",
                &fp[..12],
                &self.scaler_fingerprint[..12.min(self.scaler_fingerprint.len())]
            )));
        }
        if data.target_column != self.target_column || data.seq_len != self.model_config.seq_len {
            return Err(Error::Incompatible(format!(
                "dataset windows (target column {}, length {}) differ from the checkpoint (target column {}, length {})",
                data.target_column, data.seq_len, self.target_column, self.model_config.seq_len
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("checkpoint serializes");
        out.push(b'\n');
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let format_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let ck: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| format_err(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(format_err(format!(
                "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                ck.format, ck.version
            )));
        }
        if ck.scaler.fingerprint() != ck.scaler_fingerprint {
            return Err(format_err("scaler fingerprint does not match the stored scaler".into()));
        }
        ck.model.validate().map_err(|e| format_err(e.to_string()))?;
        Ok(ck)
    }
}
