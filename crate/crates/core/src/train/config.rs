use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EvalOptions;
use crate::network::ModelConfig;
use crate::objectives::{LossWeights, PerceptualConfig};

/// Environment variable that overrides `dataset_root`.
pub const DATASET_ROOT_ENV: &str = "FOURIERISP_DATASET_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_iters: u64,
    pub lr_init: f64,
    pub lr_halve_every: u64,
    pub batch_size: usize,
    pub patch_size: usize,
    pub seed: u64,
    /// Global gradient-norm clip; off when unset.
    pub grad_clip: Option<f64>,
    pub dataset_root: PathBuf,
    pub output_dir: PathBuf,
    /// Write a checkpoint every this many iterations (0: only at the end).
    pub checkpoint_every: u64,
    pub log_every: u64,
    pub loss_weights: LossWeights,
    pub model: ModelConfig,
    pub perceptual: PerceptualConfig,
    pub eval: EvalOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_iters: 30_000,
            lr_init: 2e-4,
            lr_halve_every: 10_000,
            batch_size: 4,
            patch_size: 448,
            seed: 0,
            grad_clip: None,
            dataset_root: PathBuf::from("data"),
            output_dir: PathBuf::from("runs"),
            checkpoint_every: 5_000,
            log_every: 100,
            loss_weights: LossWeights::default(),
            model: ModelConfig::default(),
            perceptual: PerceptualConfig::default(),
            eval: EvalOptions::default(),
        }
    }
}

/// Step-halving schedule: `lr_init · 0.5^⌊t / halve_every⌋`.
pub fn lr_at(lr_init: f64, halve_every: u64, t: u64) -> f64 {
    let halvings = t / halve_every.max(1);
    lr_init * 0.5f64.powi(halvings.min(i32::MAX as u64) as i32)
}

impl TrainConfig {
    pub fn lr_at(&self, t: u64) -> f64 {
        lr_at(self.lr_init, self.lr_halve_every, t)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies the dataset-root environment override, if set.
    pub fn apply_env(&mut self) {
        if let Some(root) = std::env::var_os(DATASET_ROOT_ENV) {
            self.dataset_root = PathBuf::from(root);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.lr_init > 0.0 && self.lr_init.is_finite()) {
            return Err(Error::Config(format!("lr_init must be positive, got {}", self.lr_init)));
        }
        if self.lr_halve_every == 0 {
            return Err(Error::Config("lr_halve_every must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.grad_clip.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return Err(Error::Config("grad_clip must be positive when set".into()));
        }
        let m = self.model.size_multiple().max(2);
        if self.patch_size == 0 || !self.patch_size.is_multiple_of(m) {
            return Err(Error::Config(format!(
                "patch_size {} must be a positive multiple of {m} for {} CAS scales",
                self.patch_size, self.model.cas_scales
            )));
        }
        Ok(())
    }

    /// Loss weights with the terms of ablated branches zeroed.
    pub fn effective_loss_weights(&self) -> LossWeights {
        let mut w = self.loss_weights.clone();
        if !self.model.enable_phase_branch {
            w.beta = 0.0;
        }
        if !self.model.enable_amplitude_branch {
            w.gamma = 0.0;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_at(0), 2e-4);
        assert_eq!(c.lr_at(9_999), 2e-4);
        assert_eq!(c.lr_at(10_000), 1e-4);
        assert_eq!(c.lr_at(20_000), 5e-5);
    }

    #[test]
    fn toml_round_trip_and_partial() {
        let c = TrainConfig::default();
        assert_eq!(TrainConfig::from_toml_str(&c.to_toml().unwrap()).unwrap(), c);
        let p = TrainConfig::from_toml_str("total_iters = 10\n[model]\nbase_channels = 16\n").unwrap();
        assert_eq!(p.total_iters, 10);
        assert_eq!(p.model.base_channels, 16);
        assert_eq!(p.lr_init, 2e-4);
        assert!(TrainConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn validation() {
        let c = TrainConfig {
            patch_size: 50,
            ..TrainConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = TrainConfig {
            model: ModelConfig {
                base_channels: 20,
                ..ModelConfig::default()
            },
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
