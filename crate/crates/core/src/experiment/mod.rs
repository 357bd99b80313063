//! Training runs, importance extraction, gradient checking and the
//! reproduction cases.

mod cases;
mod explain;
mod extended;
mod gradcheck;
mod train;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use cases::{case_config, run_case, CaseId, CaseOutcome, CheckOutcome, SeedRun, DEFAULT_SEEDS};
pub use explain::{explain, ImportanceEntry, ImportanceReport};
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport};
pub use train::{evaluate, train, training_accuracy, Evaluation, TrainResult};

use crate::data::{builtin_dataset, load_csv, select_features, BuiltinDataset, CsvSchema, Dataset};
use crate::error::{Error, Result};
use crate::network::NetworkConfig;
use crate::optim::NadamHyper;

pub const DEFAULT_EPOCHS: usize = 60_000;
pub const DEFAULT_LOSS_LOG_STRIDE: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Builtin(BuiltinDataset),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: CsvSchema,
}

impl DatasetSource {
    /// Short identifier recorded in model metadata.
    pub fn describe(&self) -> String {
        match self {
            DatasetSource::Builtin(b) => b.id().to_string(),
            DatasetSource::Csv(c) => c.path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub dataset: DatasetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_features: Option<Vec<String>>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: NadamHyper,
    #[serde(default = "default_stride")]
    pub loss_log_stride: usize,
    /// Standardize feature columns before training. Off by default.
    #[serde(default)]
    pub scale_features: bool,
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

fn default_stride() -> usize {
    DEFAULT_LOSS_LOG_STRIDE
}

impl ExperimentConfig {
    /// Loads the configured source. Relative CSV paths resolve against
    /// `base_dir` when given.
    pub fn load_dataset(&self, base_dir: Option<&Path>) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Builtin(b) => Ok(builtin_dataset(*b)),
            DatasetSource::Csv(src) => {
                let path = match base_dir {
                    Some(dir) if src.path.is_relative() => dir.join(&src.path),
                    _ => src.path.clone(),
                };
                load_csv(&path, &src.schema)
            }
        }
    }

    /// Applies feature selection and optional scaling to a raw dataset and
    /// checks it against the network's input/output widths.
    pub fn prepare(&self, raw: &Dataset) -> Result<Dataset> {
        let mut d = match &self.selected_features {
            Some(names) => select_features(raw, names)?,
            None => raw.clone(),
        };
        if self.scale_features {
            d = d.standardized();
        }
        if d.n_features() != self.network.n_inputs {
            return Err(Error::Config(format!(
                "network expects {} inputs but the dataset has {} features",
                self.network.n_inputs,
                d.n_features()
            )));
        }
        if d.n_targets() != self.network.n_outputs {
            return Err(Error::Config(format!(
                "network expects {} outputs but the dataset has {} target columns",
                self.network.n_outputs,
                d.n_targets()
            )));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.optimizer.validate()?;
        if self.loss_log_stride == 0 {
            return Err(Error::Config("loss_log_stride must be positive".into()));
        }
        Ok(())
    }
}
