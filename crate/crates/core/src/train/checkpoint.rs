//! Training state archive: parameters, Adam moments, iteration counter,
//! configuration snapshot and sampler RNG state, stored with
//! [`crate::archive`]. Tensors are named `param/<name>`, `adam.m/<name>`
//! and `adam.v/<name>`.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::optim::{Adam, AdamHyper};
use crate::archive;
use crate::error::{Error, Result};
use crate::network::{FourierIsp, ParamStore};

pub const FORMAT: &str = "fourierisp-checkpoint";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte key, hex.
    pub seed: String,
    pub stream: u64,
    /// 128-bit word position, decimal.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let bad = || Error::Checkpoint("malformed RNG state".into());
        if self.seed.len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad())?);
        Ok(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Meta {
    format: String,
    iteration: u64,
    adam: AdamHyper,
    adam_steps: u64,
    rng: RngState,
    config: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub iteration: u64,
    pub params: ParamStore,
    pub adam: Adam,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = Meta {
            format: FORMAT.into(),
            iteration: self.iteration,
            adam: self.adam.hyper,
            adam_steps: self.adam.t,
            rng: self.rng.clone(),
            config: self.config.clone(),
        };
        let names: Vec<(String, &crate::Tensor)> = self
            .params
            .names()
            .iter()
            .zip(self.params.tensors())
            .map(|(n, t)| (format!("param/{n}"), t))
            .chain(self.params.names().iter().zip(&self.adam.m).map(|(n, t)| (format!("adam.m/{n}"), t)))
            .chain(self.params.names().iter().zip(&self.adam.v).map(|(n, t)| (format!("adam.v/{n}"), t)))
            .collect();
        let refs: Vec<(&str, &crate::Tensor)> = names.iter().map(|(n, t)| (n.as_str(), *t)).collect();
        archive::to_bytes(&meta, &refs)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (meta, tensors): (Meta, _) = archive::from_bytes(bytes)?;
        if meta.format != FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", meta.format)));
        }
        let mut params = ParamStore::new();
        let (mut m, mut v) = (Vec::new(), Vec::new());
        for (name, t) in tensors {
            if let Some(n) = name.strip_prefix("param/") {
                params.push(n, t);
            } else if name.starts_with("adam.m/") {
                m.push(t);
            } else if name.starts_with("adam.v/") {
                v.push(t);
            } else {
                return Err(Error::Checkpoint(format!("unexpected tensor `{name}`")));
            }
        }
        if m.len() != params.len() || v.len() != params.len() {
            return Err(Error::Checkpoint("optimizer moments do not match parameters".into()));
        }
        meta.rng.restore()?;
        Ok(Self {
            config: meta.config,
            iteration: meta.iteration,
            params,
            adam: Adam {
                hyper: meta.adam,
                t: meta.adam_steps,
                m,
                v,
            },
            rng: meta.rng,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Rebuilds the model described by the checkpoint with its weights.
    pub fn model(&self) -> Result<FourierIsp> {
        let mut model = FourierIsp::new(&self.config.model)?;
        model.params_mut().load_from(&self.params)?;
        Ok(model)
    }
}
