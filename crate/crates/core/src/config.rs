//! Pipeline configuration, read from a TOML file with one section per stage.
//!
//! ```toml
//! [paths]
//! events = "data/events.csv"
//! projects = "data/projects.csv"
//! profiles = "data/profiles.csv"
//! out = "out"
//!
//! [params]
//! m = 3
//! t = 2
//! k = 1
//! seed = 7
//! folds = 10
//!
//! [selection]
//! mode = "percentile"   # or "fixed"
//! percentile = 0.95
//!
//! [train]
//! n_trees = 200
//!
//! [explain]
//! n_samples = 5000
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SelectionThresholds;
use crate::explain::ExplainConfig;
use crate::features::FeatureOptions;
use crate::learner::{LogRegConfig, TrainConfig};
use crate::synth::SynthConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub events: Option<PathBuf>,
    pub projects: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub m: u32,
    pub t: u32,
    pub k: u32,
    pub seed: u64,
    pub folds: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params { m: 3, t: 2, k: 1, seed: 0, folds: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Use the thresholds given in the section (defaults 57/4/1/1/2).
    #[default]
    Fixed,
    /// Recompute the count thresholds as percentiles of the input corpus.
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selection {
    pub mode: SelectionMode,
    pub percentile: f64,
    #[serde(flatten)]
    pub thresholds: SelectionThresholds,
}

impl Default for Selection {
    fn default() -> Self {
        Selection { mode: SelectionMode::Fixed, percentile: 0.95, thresholds: SelectionThresholds::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub params: Params,
    pub selection: Selection,
    pub features: FeatureOptions,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    pub explain: ExplainConfig,
    pub synth: SynthConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if p.m == 0 || p.t == 0 || p.k == 0 {
            return Err(ConfigError::Invalid("m, t and k must be at least 1".into()));
        }
        if p.folds < 2 {
            return Err(ConfigError::Invalid("folds must be at least 2".into()));
        }
        if self.selection.mode == SelectionMode::Percentile
            && !(self.selection.percentile > 0.0 && self.selection.percentile < 1.0)
        {
            return Err(ConfigError::Invalid("percentile must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
