//! Run configuration file (TOML).
//!
//! ```toml
//! [paths]
//! input = "city_day.csv"
//! output_dir = "runs"
//!
//! [model]
//! kind = "qk"
//! hidden = 16
//!
//! [optimizer]
//! kind = "adam"
//! learning_rate = 0.001
//! epochs = 20
//! seed = 42
//!
//! [preprocess]
//! gamma = 3.0
//! test_start = "2020-01-01"
//! city = "Bengaluru"
//! ```
//!
//! Every key is optional. Command-line flags override the file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::ModelConfig;
use crate::preprocess::{BreakpointTable, PipelineOptions, SplitRule};
use crate::training::OptimizerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Dataset archive; defaults to `<output_dir>/dataset.json`.
    pub dataset: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            input: None,
            output_dir: PathBuf::from("out"),
            dataset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub gamma: f64,
    pub test_start: NaiveDate,
    pub city: Option<String>,
    /// Alternative breakpoint table; the built-in CPCB table otherwise.
    pub breakpoints: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            gamma: 3.0,
            test_start: SplitRule::default().test_start,
            city: None,
            breakpoints: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub preprocess: PreprocessConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.optimizer.validate()?;
        if self.preprocess.gamma.is_nan() || self.preprocess.gamma <= 0.0 {
            return Err(Error::Config(format!(
                "preprocess.gamma must be positive, got {}",
                self.preprocess.gamma
            )));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.paths
            .dataset
            .clone()
            .unwrap_or_else(|| self.paths.output_dir.join("dataset.json"))
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            gamma: self.preprocess.gamma,
            seq_len: self.model.seq_len,
            split: SplitRule {
                test_start: self.preprocess.test_start,
            },
        }
    }

    pub fn breakpoint_table(&self) -> Result<BreakpointTable> {
        match &self.preprocess.breakpoints {
            Some(p) => BreakpointTable::load(p),
            None => Ok(BreakpointTable::cpcb()),
        }
    }
}
