//! Feature extractor for the perceptual loss.
//!
//! Either a user-supplied stack of 3×3 convolutions loaded from a tensor
//! archive (`conv{i}.w` / `conv{i}.b`) or, when none is available, a fixed
//! seeded random five-layer pyramid. Every layer is followed by a ReLU;
//! 2×2 average pooling follows the layers listed in `pool_after` whenever
//! the current feature map has even dims.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive;
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FALLBACK_SEED: u64 = 0x5eed_f00d;
const FALLBACK_WIDTHS: [usize; 6] = [3, 8, 16, 16, 32, 32];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptualConfig {
    /// Pretrained weight archive; the random extractor is used when unset
    /// or unreadable.
    pub perceptual_weights: Option<PathBuf>,
    /// Zero-based layer indices whose activations are compared.
    pub layers: Vec<usize>,
    pub pool_after: Vec<usize>,
}

impl Default for PerceptualConfig {
    fn default() -> Self {
        Self {
            perceptual_weights: None,
            layers: vec![1, 3, 4],
            pool_after: vec![1, 3],
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerceptualExtractor {
    layers: Vec<(Tensor, Tensor)>,
    taps: Vec<usize>,
    pool_after: Vec<usize>,
    fallback: bool,
}

impl PerceptualExtractor {
    /// The deterministic random pyramid.
    pub fn fallback(config: &PerceptualConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
        let layers = FALLBACK_WIDTHS
            .windows(2)
            .map(|io| {
                let (cin, cout) = (io[0], io[1]);
                let bound = (6.0 / (cin * 9) as f64).sqrt();
                let w = Tensor::from_fn([cout, cin, 3, 3], |_| rng.random_range(-bound..=bound));
                (w, Tensor::zeros([1, cout, 1, 1]))
            })
            .collect();
        Self::assemble(layers, config, true).expect("fallback layer set is valid")
    }

    pub fn from_file(path: &Path, config: &PerceptualConfig) -> Result<Self> {
        let (_meta, tensors): (serde_json::Value, _) = archive::read_file(path)?;
        let mut layers = Vec::new();
        for i in 0.. {
            let find = |n: String| tensors.iter().find(|(k, _)| *k == n).map(|(_, t)| t.clone());
            match (find(format!("conv{i}.w")), find(format!("conv{i}.b"))) {
                (Some(w), Some(b)) => layers.push((w, b)),
                _ => break,
            }
        }
        Self::assemble(layers, config, false)
    }

    /// Loads the configured weights, falling back (and flagging it) when
    /// they are absent or unusable.
    pub fn from_config(config: &PerceptualConfig) -> Self {
        match &config.perceptual_weights {
            Some(path) => Self::from_file(path, config).unwrap_or_else(|e| {
                log::warn!("perceptual weights unavailable ({e}); using the fixed random extractor");
                Self::fallback(config)
            }),
            None => Self::fallback(config),
        }
    }

    fn assemble(layers: Vec<(Tensor, Tensor)>, config: &PerceptualConfig, fallback: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("perceptual extractor has no layers".into()));
        }
        let mut cin = 3;
        for (i, (w, b)) in layers.iter().enumerate() {
            let [cout, ci, k, k2] = w.shape();
            if ci != cin || k != k2 || k % 2 == 0 || b.shape() != [1, cout, 1, 1] {
                return Err(Error::Config(format!("perceptual layer {i} has inconsistent shapes")));
            }
            cin = cout;
        }
        if config.layers.is_empty() || config.layers.iter().any(|&l| l >= layers.len()) {
            return Err(Error::Config(format!(
                "perceptual layers {:?} must be nonempty and below {}",
                config.layers,
                layers.len()
            )));
        }
        Ok(Self {
            layers,
            taps: config.layers.clone(),
            pool_after: config.pool_after.clone(),
            fallback,
        })
    }

    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    /// Activations at the configured taps.
    pub fn features(&self, g: &mut Graph, x: Var) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.taps.len());
        let mut h = x;
        let last = *self.taps.iter().max().expect("taps are nonempty");
        for (i, (w, b)) in self.layers.iter().enumerate().take(last + 1) {
            let w = g.constant(w.clone());
            let b = g.constant(b.clone());
            h = g.conv2d(h, w, Some(b));
            h = g.leaky_relu(h, 0.0);
            if self.taps.contains(&i) {
                out.push(h);
            }
            let [_, _, hh, ww] = g.shape(h);
            if self.pool_after.contains(&i) && hh % 2 == 0 && ww % 2 == 0 && hh >= 2 && ww >= 2 {
                h = g.avg_pool2(h);
            }
        }
        out
    }
}
