//! Training, evaluation and inference drivers.

pub mod checkpoint;
pub mod config;
pub mod optim;
pub mod trainer;

use std::path::{Path, PathBuf};

pub use checkpoint::{Checkpoint, RngState};
pub use config::{lr_at, TrainConfig, DATASET_ROOT_ENV};
pub use optim::{Adam, AdamHyper};
pub use trainer::{Batch, Trainer};

use crate::error::{Error, Result};
use crate::fourier::{decompose, log_amplitude_view, phase_view};
use crate::imaging::dataset::{load_dataset, DatasetConfig, DatasetIndex, Split};
use crate::imaging::io::write_rgb_png;
use crate::imaging::raw::RawImage;
use crate::imaging::rgb::RgbImage;
use crate::metrics::{evaluate_pairs, EvalOptions, EvaluationReport, Scorer};
use crate::network::FourierIsp;

/// Suffixes of the files written by [`infer`], in order.
pub const INFER_SUFFIXES: [&str; 5] = ["_y", "_yp", "_ya", "_logamp", "_phase"];

/// Loads every pair of `split` under the configured dataset root.
pub fn load_split(config: &TrainConfig, split: Split) -> Result<DatasetIndex> {
    load_dataset(
        &config.dataset_root,
        &DatasetConfig {
            split,
            patch_size: config.patch_size,
        },
    )
}

/// Scores the model's output on every pair of `index`. Pairs that cannot
/// be read or whose dims the model cannot process are skipped and listed.
pub fn evaluate(
    model: &FourierIsp,
    index: &DatasetIndex,
    options: &EvalOptions,
    scorer: Option<&mut Scorer<'_>>,
) -> Result<EvaluationReport> {
    if index.is_empty() {
        return Err(Error::Config(format!("{} split is empty", index.split)));
    }
    let items = (0..index.len()).map(|i| {
        let name = index.pairs[i].name.clone();
        let item = index.load_pair(i).and_then(|(raw, gt)| {
            let out = model.forward(&raw)?;
            Ok((out.y, gt))
        });
        (name, item)
    });
    Ok(evaluate_pairs(items, options, scorer))
}

/// Runs the model on one RAW image and writes `<stem>_y.png`; with
/// `emit_intermediates`, also the branch projections and spectrum views
/// of `Y` (see [`INFER_SUFFIXES`]).
pub fn infer(model: &FourierIsp, raw: &RawImage, out_dir: &Path, stem: &str, emit_intermediates: bool) -> Result<Vec<PathBuf>> {
    let out = model.forward(raw)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut images = vec![out.y.clamped()];
    if emit_intermediates {
        let sp = decompose(out.y.tensor())?;
        images.push(out.y_p.clamped());
        images.push(out.y_a.clamped());
        images.push(RgbImage::from_tensor(log_amplitude_view(&sp))?);
        images.push(RgbImage::from_tensor(phase_view(&sp))?);
    }
    let mut written = Vec::with_capacity(images.len());
    for (img, suffix) in images.iter().zip(INFER_SUFFIXES) {
        let path = out_dir.join(format!("{stem}{suffix}.png"));
        write_rgb_png(&path, img)?;
        written.push(path);
    }
    Ok(written)
}
