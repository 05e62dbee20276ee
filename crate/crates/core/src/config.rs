//! TOML run configuration. Every section rejects unknown keys.
//!
//! ```toml
//! seed = 7
//! [augment]
//! windows = [2, 3]
//! strides = [1, 2]
//! [split]
//! protocol = "mixed"
//! train_writers = 4
//! [model]
//! extra_dense = true
//! [train]
//! learning_rate = 0.002
//! [sweep]
//! repeats = 3
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{AugmentConfig, Protocol};
use crate::train_eval::{RunSettings, SweepSettings, TrainHyper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub protocol: Protocol,
    pub test_fraction: f64,
    /// Size of the known-writer group (first writers in sorted order).
    pub train_writers: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { protocol: Protocol::Pooled, test_fraction: 0.2, train_writers: 4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Two hidden ReLU layers before the classifier instead of one.
    pub extra_dense: bool,
    /// Hard sigmoid in the candidate and cell-output paths too.
    pub hard_sigmoid_everywhere: bool,
}

/// `[train]` keys: everything in [`TrainHyper`] except the model flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// 0 disables clipping.
    pub clip_norm: f64,
    pub val_fraction: f64,
    pub max_restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let h = TrainHyper::default();
        TrainConfig {
            learning_rate: h.learning_rate,
            rho: h.rho,
            epsilon: h.epsilon,
            batch_size: h.batch_size,
            max_epochs: h.max_epochs,
            patience: h.patience,
            clip_norm: h.clip_norm.unwrap_or(0.0),
            val_fraction: h.val_fraction,
            max_restarts: h.max_restarts,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub augment: AugmentConfig,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub sweep: SweepSettings,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn train_hyper(&self) -> TrainHyper {
        let t = &self.train;
        TrainHyper {
            learning_rate: t.learning_rate,
            rho: t.rho,
            epsilon: t.epsilon,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            clip_norm: (t.clip_norm > 0.0).then_some(t.clip_norm),
            val_fraction: t.val_fraction,
            max_restarts: t.max_restarts,
            extra_dense: self.model.extra_dense,
            hard_sigmoid_everywhere: self.model.hard_sigmoid_everywhere,
        }
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings { augment: self.augment.clone(), train: self.train_hyper() }
    }

    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        self.train_hyper().validate()?;
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config("split.test_fraction must lie in (0, 1)".into()));
        }
        if !(self.sweep.test_fraction > 0.0 && self.sweep.test_fraction < 1.0) || self.sweep.repeats == 0 {
            return Err(Error::Config("sweep needs repeats >= 1 and test_fraction in (0, 1)".into()));
        }
        if self.train.clip_norm < 0.0 {
            return Err(Error::Config("train.clip_norm must be >= 0".into()));
        }
        Ok(())
    }
}
