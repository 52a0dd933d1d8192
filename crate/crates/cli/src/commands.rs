use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fourierisp::fourier::{decompose as spectral_decompose, log_amplitude_view, phase_view};
use fourierisp::imaging::io::{read_raw_png, read_rgb_png, write_rgb_png};
use fourierisp::imaging::{
    create_layout, procedural_rgb, synthesize_raw, write_pair, DatasetMeta, DegradationParams, RgbImage, Split,
};
use fourierisp::metrics::EvalOptions;
use fourierisp::train::{self, Checkpoint, TrainConfig, Trainer};
use fourierisp::objectives::LossReport;
use fourierisp::Error;

use crate::{DecomposeArgs, EvalArgs, InferArgs, SynthArgs, TrainArgs};

pub fn train(args: TrainArgs) -> Result<()> {
    let (mut config, checkpoint) = match &args.resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            (ck.config.clone(), Some(ck))
        }
        None => (TrainConfig::from_file(&args.config)?, None),
    };
    config.apply_env();
    if let Some(root) = args.dataset_root {
        config.dataset_root = root;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(n) = args.iters {
        config.total_iters = n;
    }
    if let Some(seed) = args.seed {
        if checkpoint.is_some() {
            log::warn!("--seed ignored when resuming; the checkpoint's RNG state is used");
        } else {
            config.seed = seed;
            config.model.seed = seed;
        }
    }
    config.validate()?;

    let index = train::load_split(&config, Split::Train)?;
    if index.is_empty() {
        return Err(Error::Config(format!("no training pairs under {}", config.dataset_root.display())).into());
    }
    log::info!("{} training pairs from {}", index.len(), config.dataset_root.display());
    let data = index.load_all()?;

    let mut trainer = match &checkpoint {
        Some(ck) => {
            let mut ck = ck.clone();
            ck.config = config.clone();
            Trainer::resume(&ck, data)?
        }
        None => Trainer::new(config.clone(), data)?,
    };
    let (_, report) = fourierisp::network::build_model(&config.model)?;
    log::info!("model parameters: {report}");
    if trainer.extractor().is_fallback() {
        log::warn!("perceptual loss uses the fixed random extractor");
    }

    let out = &config.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), config.to_toml()?).with_context(|| format!("writing config to {}", out.display()))?;
    let log_path = out.join("train_log.tsv");
    let mut log_file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .with_context(|| format!("opening {}", log_path.display()))?;
    if trainer.iteration() == 0 {
        writeln!(log_file, "iteration\tlr\t{}", LossReport::header())?;
    }

    trainer.run_until(config.total_iters, |t, r| {
        let it = t.iteration();
        let lr = t.config().lr_at(it - 1);
        writeln!(log_file, "{it}\t{lr:e}\t{}", r.tsv_row()).map_err(|e| Error::Io {
            path: log_path.clone(),
            source: e,
        })?;
        if config.log_every > 0 && it % config.log_every == 0 {
            log::info!("iter {it} lr {lr:.3e} total {:.5} l1 {:.5} ssim {:.5}", r.total, r.l_1, r.l_ssim);
        }
        if config.checkpoint_every > 0 && it % config.checkpoint_every == 0 {
            let path = out.join(format!("ckpt_{it:06}.bin"));
            t.checkpoint().save(&path)?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    })?;
    let final_path = out.join("final.bin");
    trainer.checkpoint().save(&final_path)?;
    println!("finished at iteration {}; checkpoint {}", trainer.iteration(), final_path.display());
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let mut config = ck.config.clone();
    config.apply_env();
    if let Some(root) = args.dataset_root {
        config.dataset_root = root;
    }
    let model = ck.model()?;
    let index = train::load_split(&config, args.split)?;
    let options = EvalOptions {
        quantize_8bit: !args.no_quantize,
        ..config.eval.clone()
    };
    let report = train::evaluate(&model, &index, &options, None)?;
    print!("{}", report.to_table());
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        report.write(&dir, &format!("{}_metrics", args.split))?;
    }
    if !report.skipped.is_empty() {
        eprintln!("{} image(s) skipped", report.skipped.len());
    }
    Ok(())
}

fn raw_format(args: &InferArgs) -> Result<DatasetMeta> {
    let found = match args.raw.parent() {
        Some(dir) => DatasetMeta::find_upwards(dir)?,
        None => None,
    };
    let base = match (found, args.bit_depth.is_some() && args.cfa.is_some()) {
        (Some(meta), _) => meta,
        (None, true) => DatasetMeta::default(),
        (None, false) => {
            return Err(Error::Config(format!(
                "no meta.toml near {}; pass --bit-depth and --cfa",
                args.raw.display()
            ))
            .into())
        }
    };
    Ok(DatasetMeta {
        bit_depth: args.bit_depth.unwrap_or(base.bit_depth),
        cfa: args.cfa.unwrap_or(base.cfa),
    })
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| "image".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn infer(args: InferArgs) -> Result<()> {
    let meta = raw_format(&args)?;
    let model = Checkpoint::load(&args.checkpoint)?.model()?;
    let raw = read_raw_png(&args.raw, meta.bit_depth, meta.cfa)?;
    let written = train::infer(&model, &raw, &args.out, &stem_of(&args.raw), args.intermediates)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn decompose(args: DecomposeArgs) -> Result<()> {
    let rgb = read_rgb_png(&args.input)?;
    let sp = spectral_decompose(rgb.tensor())?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let stem = stem_of(&args.input);
    for (suffix, view) in [("logamp", log_amplitude_view(&sp)), ("phase", phase_view(&sp))] {
        let path = args.out.join(format!("{stem}_{suffix}.png"));
        write_rgb_png(&path, &RgbImage::from_tensor(view)?)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Crops to even dims so the mosaic tiles evenly.
fn even_crop(rgb: RgbImage) -> Result<RgbImage> {
    let (h, w) = (rgb.height() & !1, rgb.width() & !1);
    if h == 0 || w == 0 {
        return Err(Error::Dimension(format!("image {}×{} is too small", rgb.height(), rgb.width())).into());
    }
    if (h, w) == (rgb.height(), rgb.width()) {
        Ok(rgb)
    } else {
        Ok(rgb.crop(0, 0, h, w)?)
    }
}

pub fn synth_data(args: SynthArgs) -> Result<()> {
    let sources: Vec<(String, RgbImage)> = match &args.input {
        Some(dir) => list_pngs(dir)?
            .into_iter()
            .map(|p| Ok((stem_of(&p), read_rgb_png(&p)?)))
            .collect::<Result<_>>()?,
        None => (0..args.procedural)
            .map(|i| (format!("img_{i:04}"), procedural_rgb(args.size, args.size, args.seed.wrapping_add(i as u64))))
            .collect(),
    };
    if sources.is_empty() {
        return Err(Error::Config("no input images".into()).into());
    }
    if args.val + args.test > sources.len() {
        return Err(Error::Config(format!(
            "--val {} plus --test {} exceeds the {} available images",
            args.val,
            args.test,
            sources.len()
        ))
        .into());
    }
    create_layout(&args.out)?;
    let meta = DatasetMeta {
        bit_depth: args.bit_depth,
        cfa: args.cfa,
    };
    meta.write(&args.out)?;
    let n = sources.len();
    let mut counts = [0usize; 3];
    for (i, (name, rgb)) in sources.into_iter().enumerate() {
        let split = if i >= n - args.test {
            Split::Test
        } else if i >= n - args.test - args.val {
            Split::Val
        } else {
            Split::Train
        };
        let gt = even_crop(rgb)?.quantized_8bit();
        let params = DegradationParams {
            bit_depth: args.bit_depth,
            cfa: args.cfa,
            seed: args.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            ..DegradationParams::default()
        };
        let raw = synthesize_raw(&gt, &params)?;
        write_pair(&args.out, split, &name, &raw, &gt)?;
        counts[split as usize] += 1;
    }
    println!(
        "wrote {} train, {} val, {} test pairs to {}",
        counts[0],
        counts[1],
        counts[2],
        args.out.display()
    );
    Ok(())
}
