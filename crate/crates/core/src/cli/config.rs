//! Run configuration document.
//!
//! A TOML file with optional sections; every key has a default and unknown
//! keys are rejected:
//!
//! ```toml
//! schema_version = 1
//!
//! [split]
//! train = 0.7
//! val = 0.15
//! test = 0.15
//! seed = 42
//!
//! [subsample]
//! fraction = 0.5
//! seed = 42
//!
//! [[select.chain]]
//! kind = "adaptive_variance"
//! percentile = 50.0
//!
//! [[select.chain]]
//! kind = "select_k_best"
//! k = 10
//! score_fn = "f_classif"
//!
//! [search]
//! layers = 3
//! pca_variance = [0.95, 0.84, 0.63]   # or a single number
//! normalize = true
//! unit = true
//! output_neurons = 1
//! out_activation = "sigmoid"
//!
//! [search.hidden]
//! activation = "relu"
//! dropout = 0.2
//! l2 = 0.01
//! init = "he_normal"
//! batch_norm = true
//!
//! [search.train]
//! epochs = 10
//! batch_size = 32
//! loss = "binary_crossentropy"
//! optimizer = "adam"
//! learn_rate = 0.001
//! stop_criteria = "val_loss"
//! es_mode = "min"
//! es_patience = 5
//! metrics = ["accuracy"]
//! verbose = 0
//! seed = 42
//!
//! [nas]
//! val_fraction = 0.2
//!
//! [plot]
//! show_min_max = true
//! user_metric = "accuracy"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datatools::SplitRatios;
use crate::error::{Error, Result};
use crate::feature_select::SelectorSpec;
use crate::pccdnas::SearchConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.7,
            val: 0.15,
            test: 0.15,
            seed: DEFAULT_SEED,
        }
    }
}

impl SplitSection {
    pub fn ratios(&self) -> Result<SplitRatios> {
        SplitRatios::new(self.train, self.val, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsampleSection {
    pub fraction: f64,
    pub seed: u64,
}

impl Default for SubsampleSection {
    fn default() -> Self {
        SubsampleSection {
            fraction: 0.5,
            seed: DEFAULT_SEED,
        }
    }
}

impl SubsampleSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "fraction {} outside (0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectSection {
    /// Applied in order; an empty chain keeps every feature.
    pub chain: Vec<SelectorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NasSection {
    /// Share of the training CSV held out (stratified) for validation when
    /// no separate validation file is given; 0 disables validation.
    pub val_fraction: f64,
}

impl Default for NasSection {
    fn default() -> Self {
        NasSection { val_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotSection {
    pub show_min_max: bool,
    /// Second panel of history plots; omit for a loss-only plot.
    pub user_metric: Option<String>,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection {
            show_min_max: true,
            user_metric: Some("accuracy".to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub split: SplitSection,
    pub subsample: SubsampleSection,
    pub select: SelectSection,
    pub search: SearchConfig,
    pub nas: NasSection,
    pub plot: PlotSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            split: SplitSection::default(),
            subsample: SubsampleSection::default(),
            select: SelectSection::default(),
            search: SearchConfig::default(),
            nas: NasSection::default(),
            plot: PlotSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "config: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Defaults when `path` is `None`.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("config: {e}")))
    }
}
