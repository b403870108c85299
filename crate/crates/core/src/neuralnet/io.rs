//! `.cmnet` model files.
//!
//! A `.cmnet` file is a UTF-8 JSON document:
//!
//! ```text
//! {
//!   "format": "cmnet",
//!   "version": 1,
//!   "network": {
//!     "input_dim": 2,
//!     "seed": 42,
//!     "layers": [
//!       { "spec": { "units": 3, "activation": "relu", "dropout_rate": 0.0,
//!                   "batch_norm": false, "l2": 0.0, "init": "he_normal" },
//!         "input_dim": 2,
//!         "weights": { "rows": 2, "cols": 3, "data": [ ... ] },
//!         "bias": [ ... ],
//!         "bn": { "gamma": [...], "beta": [...],
//!                 "running_mean": [...], "running_var": [...] } }
//!     ]
//!   },
//!   "scaler": { "mean": [...], "scale": [...] | null },
//!   "class_names": ["cat", "dog"]
//! }
//! ```
//!
//! Numbers are written in shortest round-trip decimal form, so a save/load
//! cycle reproduces every parameter bit for bit. `bn` is present only on
//! batch-normalised layers; `scaler` is optional input preprocessing and
//! `class_names` optionally names the output classes by index.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::DenseLayer;
use super::network::DenseNetwork;
use crate::error::{Error, Result};
use crate::numerics::Scaler;

pub const CMNET_FORMAT: &str = "cmnet";
pub const CMNET_VERSION: u32 = 1;
pub const CMNET_EXTENSION: &str = "cmnet";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    input_dim: usize,
    seed: u64,
    layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    network: NetworkDoc,
    #[serde(default)]
    scaler: Option<Scaler>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    class_names: Vec<String>,
}

/// A network plus the input preprocessing it was trained behind.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: DenseNetwork,
    pub scaler: Option<Scaler>,
    /// Output class index → label text; may be empty.
    pub class_names: Vec<String>,
}

impl ModelFile {
    pub fn to_text(&self) -> Result<String> {
        if let Some(s) = &self.scaler {
            if s.width() != self.network.input_dim() {
                return Err(Error::invalid("scaler width does not match network input"));
            }
        }
        let doc = ModelDoc {
            format: CMNET_FORMAT.to_string(),
            version: CMNET_VERSION,
            network: NetworkDoc {
                input_dim: self.network.input_dim(),
                seed: self.network.seed(),
                layers: self.network.layers().to_vec(),
            },
            scaler: self.scaler.clone(),
            class_names: self.class_names.clone(),
        };
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(format!("cmnet: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("cmnet: {e}")))?;
        if doc.format != CMNET_FORMAT {
            return Err(Error::Format(format!(
                "cmnet: unexpected format tag '{}'",
                doc.format
            )));
        }
        if doc.version != CMNET_VERSION {
            return Err(Error::Format(format!(
                "cmnet: unsupported version {}",
                doc.version
            )));
        }
        let network =
            DenseNetwork::from_parts(doc.network.input_dim, doc.network.layers, doc.network.seed)
                .map_err(|e| Error::Format(format!("cmnet: {e}")))?;
        if let Some(s) = &doc.scaler {
            let bad_scale = s.scale.as_ref().is_some_and(|v| v.len() != s.width());
            if s.width() != network.input_dim() || bad_scale {
                return Err(Error::Format(
                    "cmnet: scaler width does not match network".into(),
                ));
            }
        }
        Ok(ModelFile {
            network,
            scaler: doc.scaler,
            class_names: doc.class_names,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_text(&text)
    }
}
