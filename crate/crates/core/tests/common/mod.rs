#![allow(dead_code)]

pub mod oracle;

use fourierisp::imaging::{procedural_rgb, synthesize_raw, DegradationParams, RawImage, RgbImage};
use fourierisp::network::{Initializer, ModelConfig, ParamStore};
use fourierisp::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rand_tensor(shape: [usize; 4], lo: f64, hi: f64, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

pub fn rgb_tensor(h: usize, w: usize, seed: u64) -> Tensor {
    rand_tensor([1, 3, h, w], 0.0, 1.0, seed)
}

/// `n` synthetic pairs of `size`×`size`, ground truth at 8-bit precision.
pub fn synthetic_pairs(n: usize, size: usize) -> Vec<(RawImage, RgbImage)> {
    (0..n as u64)
        .map(|i| {
            let rgb = procedural_rgb(size, size, i).quantized_8bit();
            let params = DegradationParams {
                seed: i,
                ..DegradationParams::default()
            };
            (synthesize_raw(&rgb, &params).unwrap(), rgb)
        })
        .collect()
}

/// Smallest model: 16 channels, one block per branch, two CAS scales.
pub fn tiny_model_config(seed: u64) -> ModelConfig {
    ModelConfig {
        base_channels: 16,
        n_blocks_pes: 1,
        n_blocks_ars: 1,
        cas_scales: 2,
        seed,
        ..ModelConfig::default()
    }
}

pub fn store_with<T>(seed: u64, build: impl FnOnce(&mut Initializer<'_>) -> T) -> (ParamStore, T) {
    let mut store = ParamStore::new();
    let item = {
        let mut init = Initializer::new(&mut store, seed);
        build(&mut init)
    };
    (store, item)
}

/// The toy overfitting setup: 16 channels, one block per branch, three
/// CAS scales, full 64×64 images, batch 1.
pub fn toy_train_config() -> fourierisp::train::TrainConfig {
    fourierisp::train::TrainConfig {
        total_iters: 2000,
        lr_init: 2e-3,
        lr_halve_every: 500,
        batch_size: 1,
        patch_size: 64,
        seed: 1,
        model: ModelConfig {
            base_channels: 16,
            n_blocks_pes: 1,
            n_blocks_ars: 1,
            cas_scales: 3,
            ..ModelConfig::default()
        },
        ..fourierisp::train::TrainConfig::default()
    }
}
