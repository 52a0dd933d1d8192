use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{Checkpoint, RngState};
use super::config::TrainConfig;
use super::optim::{clip_grad_norm, Adam};
use crate::error::{Error, Result};
use crate::imaging::dataset::{crop_pair, random_patch_origin};
use crate::imaging::raw::RawImage;
use crate::imaging::rgb::RgbImage;
use crate::network::{FourierIsp, ModelInputs};
use crate::objectives::{total_loss_graph, LossReport, LossWeights, PerceptualExtractor};
use crate::tensor::Tensor;

/// A batch ready for the network: inputs plus ground truth `[N, 3, H, W]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: ModelInputs,
    pub target: Tensor,
}

impl Batch {
    pub fn from_pairs(pairs: &[(RawImage, RgbImage)]) -> Result<Self> {
        let raws: Vec<RawImage> = pairs.iter().map(|(r, _)| r.clone()).collect();
        let gts: Vec<Tensor> = pairs.iter().map(|(_, g)| g.tensor().clone()).collect();
        let inputs = ModelInputs::from_raws(&raws)?;
        let target = Tensor::stack(&gts)?;
        if target.shape()[2..] != inputs.demosaiced.shape()[2..] {
            return Err(Error::dim("RAW and RGB dims differ within the batch"));
        }
        Ok(Self { inputs, target })
    }
}

/// Single-threaded, deterministic training loop.
pub struct Trainer {
    config: TrainConfig,
    model: FourierIsp,
    adam: Adam,
    rng: ChaCha8Rng,
    iteration: u64,
    data: Vec<(RawImage, RgbImage)>,
    extractor: PerceptualExtractor,
    weights: LossWeights,
}

impl Trainer {
    pub fn new(config: TrainConfig, data: Vec<(RawImage, RgbImage)>) -> Result<Self> {
        let model = FourierIsp::new(&config.model)?;
        let adam = Adam::new(model.params());
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::assemble(config, model, adam, rng, 0, data)
    }

    pub fn resume(checkpoint: &Checkpoint, data: Vec<(RawImage, RgbImage)>) -> Result<Self> {
        let model = checkpoint.model()?;
        let rng = checkpoint.rng.restore()?;
        Self::assemble(
            checkpoint.config.clone(),
            model,
            checkpoint.adam.clone(),
            rng,
            checkpoint.iteration,
            data,
        )
    }

    fn assemble(
        config: TrainConfig,
        model: FourierIsp,
        adam: Adam,
        rng: ChaCha8Rng,
        iteration: u64,
        data: Vec<(RawImage, RgbImage)>,
    ) -> Result<Self> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        for (i, (raw, rgb)) in data.iter().enumerate() {
            if (raw.height(), raw.width()) != (rgb.height(), rgb.width()) {
                return Err(Error::dim(format!("training pair {i}: RAW and RGB dims differ")));
            }
            if raw.height() < config.patch_size || raw.width() < config.patch_size {
                return Err(Error::dim(format!(
                    "training pair {i} is {}×{}, smaller than patch size {}",
                    raw.height(),
                    raw.width(),
                    config.patch_size
                )));
            }
        }
        let extractor = PerceptualExtractor::from_config(&config.perceptual);
        let weights = config.effective_loss_weights();
        Ok(Self {
            config,
            model,
            adam,
            rng,
            iteration,
            data,
            extractor,
            weights,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self) -> &FourierIsp {
        &self.model
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn extractor(&self) -> &PerceptualExtractor {
        &self.extractor
    }

    pub fn loss_weights(&self) -> &LossWeights {
        &self.weights
    }

    /// Draws `batch_size` random, even-aligned patches.
    pub fn sample_batch(&mut self) -> Result<Batch> {
        let p = self.config.patch_size;
        let mut pairs = Vec::with_capacity(self.config.batch_size);
        for _ in 0..self.config.batch_size {
            let i = self.rng.random_range(0..self.data.len());
            let (raw, rgb) = &self.data[i];
            let (top, left) = random_patch_origin(&mut self.rng, raw.height(), raw.width(), p)?;
            pairs.push(crop_pair(raw, rgb, top, left, p)?);
        }
        Batch::from_pairs(&pairs)
    }

    /// Loss and parameter gradients on a batch, without updating.
    pub fn loss_and_grads(&self, batch: &Batch) -> Result<(LossReport, Vec<Tensor>)> {
        let mut g = self.model.params().bind(true);
        let packed = g.constant(batch.inputs.packed.clone());
        let dem = g.constant(batch.inputs.demosaiced.clone());
        let gt = g.constant(batch.target.clone());
        let out = self.model.forward_graph(&mut g, packed, dem)?;
        let vars = total_loss_graph(&mut g, out.y, out.y_p, out.y_a, gt, &self.weights, &self.extractor)?;
        let report = vars.report(&g, &self.weights, self.extractor.is_fallback());
        report.check_finite(self.iteration)?;
        let mut grads = g.backward(vars.total);
        let tensors = self
            .model
            .params()
            .ids()
            .map(|id| {
                grads
                    .take(id.var())
                    .unwrap_or_else(|| Tensor::zeros(self.model.params().get(id).shape()))
            })
            .collect();
        Ok((report, tensors))
    }

    pub fn loss(&self, batch: &Batch) -> Result<LossReport> {
        let mut g = self.model.params().bind(false);
        let packed = g.constant(batch.inputs.packed.clone());
        let dem = g.constant(batch.inputs.demosaiced.clone());
        let gt = g.constant(batch.target.clone());
        let out = self.model.forward_graph(&mut g, packed, dem)?;
        let vars = total_loss_graph(&mut g, out.y, out.y_p, out.y_a, gt, &self.weights, &self.extractor)?;
        Ok(vars.report(&g, &self.weights, self.extractor.is_fallback()))
    }

    /// One Adam update on `batch` at the scheduled learning rate; returns
    /// the loss before the update.
    pub fn step_on(&mut self, batch: &Batch) -> Result<LossReport> {
        let (report, mut grads) = self.loss_and_grads(batch)?;
        if let Some(max) = self.config.grad_clip {
            clip_grad_norm(&mut grads, max);
        }
        let lr = self.config.lr_at(self.iteration);
        self.adam.step(self.model.params_mut(), &grads, lr);
        self.iteration += 1;
        Ok(report)
    }

    pub fn step(&mut self) -> Result<LossReport> {
        let batch = self.sample_batch()?;
        self.step_on(&batch)
    }

    /// Steps until `until` iterations have been completed (capped at
    /// `total_iters`), calling `on_step` after each.
    pub fn run_until(&mut self, until: u64, mut on_step: impl FnMut(&Self, &LossReport) -> Result<()>) -> Result<()> {
        let until = until.min(self.config.total_iters);
        while self.iteration < until {
            let report = self.step()?;
            on_step(self, &report)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            iteration: self.iteration,
            params: self.model.params().clone(),
            adam: self.adam.clone(),
            rng: RngState::capture(&self.rng),
        }
    }
}
