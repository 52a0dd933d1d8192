//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed; exits
//! nonzero when any criterion fails. `ACCEPTANCE_ONLY=3,5` limits the run.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{oracle, rand_tensor, synthetic_pairs, tiny_model_config, toy_train_config};
use fourierisp::autodiff::check::{directional, finite_difference};
use fourierisp::autodiff::{Graph, Var};
use fourierisp::fourier::{decompose, phase_of, recompose, wrap_phase};
use fourierisp::metrics::{ms_ssim, psnr, ssim};
use fourierisp::network::*;
use fourierisp::objectives::*;
use fourierisp::train::{lr_at, Checkpoint, TrainConfig, Trainer};
use fourierisp::Tensor;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, format!("{what} took {elapsed:.1?}, limit {limit:?}"))
}

fn fourier_round_trip() -> Outcome {
    let start = Instant::now();
    let mut worst_rt: f64 = 0.0;
    for seed in 0..4 {
        let x = rand_tensor([1, 3, 64, 64], 0.0, 1.0, seed);
        worst_rt = worst_rt.max(decompose(&x).and_then(|sp| recompose(&sp)).map_err(|e| e.to_string())?.max_abs_diff(&x));
    }
    let x = rand_tensor([1, 3, 8, 8], 0.0, 1.0, 99);
    let sp = decompose(&x).map_err(|e| e.to_string())?;
    let mut worst_dft: f64 = 0.0;
    for c in 0..3 {
        let (re, im) = oracle::naive_dft(x.plane(0, c), 8, 8);
        for i in 0..64 {
            let amp = re[i].hypot(im[i]);
            worst_dft = worst_dft.max((sp.amplitude.plane(0, c)[i] - amp).abs());
            if amp > 1e-9 {
                let dp = wrap_phase(sp.phase.plane(0, c)[i] - oracle::phase(re[i], im[i]));
                worst_dft = worst_dft.max(dp.abs());
            }
        }
    }
    ensure(worst_rt < 1e-5, format!("round trip error {worst_rt:e}"))?;
    ensure(worst_dft < 1e-6, format!("DFT oracle error {worst_dft:e}"))?;
    within(start.elapsed(), Duration::from_secs(1), "round trip")?;
    Ok(format!("round trip {worst_rt:.1e}, DFT oracle {worst_dft:.1e}"))
}

fn shift_theorem_split() -> Outcome {
    let x = fourierisp::imaging::procedural_rgb(32, 32, 5).into_tensor();
    let mut worst_amp: f64 = 0.0;
    let mut least_pha = f64::INFINITY;
    for (dy, dx) in [(1, 0), (0, 3), (5, -7), (16, 16), (-9, 2)] {
        let s = x.roll(dy, dx);
        worst_amp = worst_amp.max(amplitude_loss(&x, &s).map_err(|e| e.to_string())?);
        least_pha = least_pha.min(phase_loss(&x, &s).map_err(|e| e.to_string())?);
    }
    ensure(worst_amp < 1e-5, format!("amplitude loss {worst_amp:e}"))?;
    ensure(least_pha > 0.01, format!("phase loss {least_pha}"))?;
    Ok(format!("max amplitude loss {worst_amp:.1e}, min phase loss {least_pha:.3}"))
}

fn block_invariants() -> Outcome {
    let mut worst = [0.0f64; 2];
    for trial in 0..100u64 {
        for (k, component) in [SpectralComponent::Amplitude, SpectralComponent::Phase].into_iter().enumerate() {
            let (store, block) = common::store_with(trial, |init| FourierBlock::new(init, "b", 4, component, true));
            let mut g = store.bind(false);
            let x = g.constant(rand_tensor([1, 4, 8, 8], -1.0, 1.0, 1000 + trial));
            let (_, trace) = block.forward_traced(&mut g, x, x).map_err(|e| e.to_string())?;
            let t = trace.ok_or("frequency path disabled")?;
            let (re, im) = (g.value(t.spec_re), g.value(t.spec_im));
            for i in 0..re.len() {
                let err = match component {
                    SpectralComponent::Amplitude => {
                        if g.value(t.amplitude_out).data()[i] <= 1e-6 {
                            continue;
                        }
                        wrap_phase(phase_of(re.data()[i], im.data()[i]) - g.value(t.phase).data()[i]).abs()
                    }
                    SpectralComponent::Phase => {
                        (re.data()[i].hypot(im.data()[i]) - g.value(t.amplitude).data()[i]).abs()
                    }
                };
                worst[k] = worst[k].max(err);
            }
        }
    }
    ensure(worst[0] < 1e-4, format!("FARB phase drift {:e}", worst[0]))?;
    ensure(worst[1] < 1e-4, format!("FPRB amplitude drift {:e}", worst[1]))?;
    Ok(format!("FARB phase {:.1e}, FPRB amplitude {:.1e} over 100 inputs", worst[0], worst[1]))
}

/// Relative error of the full-model JVP against central differences in
/// a random joint direction over parameters and inputs. The step stays
/// well below the distance to the nearest non-smooth point (leaky-ReLU
/// corners, |z| near zero) that larger steps straddle.
fn model_jvp_error(seed: u64) -> Result<f64, String> {
    let model = FourierIsp::new(&tiny_model_config(seed)).map_err(|e| e.to_string())?;
    let rgb = fourierisp::imaging::procedural_rgb(6, 6, seed + 4);
    let raw = fourierisp::imaging::synthesize_raw(&rgb, &fourierisp::imaging::DegradationParams::default())
        .map_err(|e| e.to_string())?;
    let inputs = ModelInputs::from_raws(&[raw]).map_err(|e| e.to_string())?;
    let mut tensors = model.params().tensors().to_vec();
    let n_params = tensors.len();
    tensors.push(inputs.packed.clone());
    tensors.push(inputs.demosaiced.clone());
    let directions: Vec<Tensor> = tensors
        .iter()
        .enumerate()
        .map(|(i, t)| rand_tensor(t.shape(), -1.0, 1.0, 500 + 1000 * seed + i as u64))
        .collect();
    let weights = rand_tensor([1, 3, 6, 6], -1.0, 1.0, 7 + seed);
    let (analytic, numeric) = directional(&tensors, &directions, 1e-7, |g: &mut Graph, v: &[Var]| {
        let out = model.forward_graph(g, v[n_params], v[n_params + 1]).expect("forward");
        let w = g.constant(weights.clone());
        let p = g.mul(out.y, w);
        g.mean(p)
    });
    Ok((analytic - numeric).abs() / numeric.abs().max(1e-12))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut model_rel: f64 = 0.0;
    for seed in 0..3 {
        model_rel = model_rel.max(model_jvp_error(seed)?);
    }
    ensure(model_rel < 1e-3, format!("full-model JVP relative error {model_rel:e}"))?;

    let y = rand_tensor([1, 3, 6, 6], 0.1, 0.9, 8);
    let gt = rand_tensor([1, 3, 6, 6], 0.1, 0.9, 9);
    let ext = PerceptualExtractor::fallback(&PerceptualConfig::default());
    let mut worst_loss: f64 = 0.0;
    for k in 0..6 {
        let r = finite_difference(&[y.clone(), gt.clone()], 0, 1e-6, 108, |g, v| {
            match k {
                0 => phase_loss_graph(g, v[0], v[1]),
                1 => amplitude_loss_graph(g, v[0], v[1]),
                2 => frequency_loss_graph(g, v[0], v[1]),
                3 => l1_loss_graph(g, v[0], v[1]),
                4 => ssim_loss_graph(g, v[0], v[1]),
                _ => perceptual_loss_graph(g, v[0], v[1], &ext),
            }
            .expect("loss")
        });
        worst_loss = worst_loss.max(r.rel_error);
    }
    ensure(worst_loss < 1e-3, format!("per-loss relative error {worst_loss:e}"))?;
    within(start.elapsed(), Duration::from_secs(120), "gradient checks")?;
    Ok(format!("model JVP {model_rel:.1e}, losses {worst_loss:.1e}"))
}

fn loss_bookkeeping() -> Outcome {
    let pairs = synthetic_pairs(1, 16);
    let model = FourierIsp::new(&tiny_model_config(0)).map_err(|e| e.to_string())?;
    let out = model.forward(&pairs[0].0).map_err(|e| e.to_string())?;
    let ext = PerceptualExtractor::fallback(&PerceptualConfig::default());
    let w = LossWeights::default();
    ensure((w.alpha, w.beta, w.gamma) == (0.1, 0.1, 0.1), "default weights")?;
    let r = total_loss(&out, &pairs[0].1, &w, &ext).map_err(|e| e.to_string())?;
    let spa = r.l_vgg + 0.5 * r.l_ssim + r.l_1;
    let expected = spa + 0.1 * r.l_fre + 0.1 * r.l_pha + 0.1 * r.l_amp;
    ensure(r.l_spa == spa && r.total == expected, format!("total {} vs {}", r.total, expected))?;
    ensure(r.terms().iter().all(|(_, v)| *v >= 0.0), "negative term")?;

    let gt = &pairs[0].1;
    let perfect = ModelOutputs {
        y: gt.clone(),
        y_p: gt.clone(),
        y_a: gt.clone(),
    };
    let z = total_loss(&perfect, gt, &w, &ext).map_err(|e| e.to_string())?;
    let worst = z.terms().iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    ensure(worst < 1e-12, format!("equal outputs leave a term of {worst:e}"))?;
    Ok(format!("total {:.6} reproduced exactly; zero at GT (max {worst:.0e})", r.total))
}

fn metric_oracles() -> Outcome {
    let p = psnr(&Tensor::zeros([1, 3, 8, 8]), &Tensor::full([1, 3, 8, 8], 0.5), 1.0).map_err(|e| e.to_string())?;
    ensure((p - 6.0206).abs() < 1e-4, format!("PSNR {p}"))?;
    let a = rand_tensor([1, 3, 24, 24], 0.0, 1.0, 1);
    let b = a.zip_map(&rand_tensor([1, 3, 24, 24], -0.2, 0.2, 2), |x, n| x + n);
    let ds = (ssim(&a, &b).map_err(|e| e.to_string())? - oracle::ssim(&a, &b)).abs();
    let a = rand_tensor([1, 1, 176, 176], 0.0, 1.0, 3);
    let b = a.zip_map(&rand_tensor([1, 1, 176, 176], -0.3, 0.3, 4), |x, n| x + n);
    let dm = (ms_ssim(&a, &b, 5).map_err(|e| e.to_string())? - oracle::ms_ssim(&a, &b)).abs();
    ensure(ds < 1e-5 && dm < 1e-5, format!("SSIM {ds:e}, MS-SSIM {dm:e}"))?;
    Ok(format!("PSNR {p:.4} dB; SSIM {ds:.1e}, MS-SSIM {dm:.1e} from oracles"))
}

fn toy_overfit() -> Outcome {
    let start = Instant::now();
    let data = synthetic_pairs(8, 64);
    let config = toy_train_config();
    let mut trainer = Trainer::new(config.clone(), data.clone()).map_err(|e| e.to_string())?;
    trainer.run_until(config.total_iters, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let model = trainer.model();
    let mut total = 0.0;
    for (raw, rgb) in &data {
        let y = model.forward(raw).map_err(|e| e.to_string())?.y.quantized_8bit();
        total += psnr(y.tensor(), rgb.tensor(), 1.0).map_err(|e| e.to_string())?;
    }
    let mean = total / data.len() as f64;
    let elapsed = start.elapsed();
    ensure(mean >= 35.0, format!("training PSNR {mean:.2} dB after {elapsed:.0?}"))?;
    within(elapsed, Duration::from_secs(15 * 60), &format!("toy training ({mean:.2} dB)"))?;
    Ok(format!("training PSNR {mean:.2} dB after {} iterations in {elapsed:.0?}", config.total_iters))
}

fn schedule_and_params() -> Outcome {
    let lrs = [0, 10_000, 20_000].map(|t| lr_at(2e-4, 10_000, t));
    ensure(lrs == [2e-4, 1e-4, 5e-5], format!("learning rates {lrs:?}"))?;
    let count = |c| {
        build_model(&ModelConfig { base_channels: c, ..ModelConfig::default() })
            .map(|(_, r)| r.total)
            .map_err(|e| e.to_string())
    };
    let (a, b, c) = (count(16)?, count(24)?, count(48)?);
    ensure(a < b && b < c, format!("counts {a}, {b}, {c}"))?;
    Ok(format!("lr {lrs:?}; params 16ch {a} < 24ch {b} < 48ch {c} (reference 24ch {REFERENCE_PARAMS_24CH})"))
}

fn ablation_harness() -> Outcome {
    let data = synthetic_pairs(2, 16);
    let mut lines = Vec::new();
    for (name, phase, amp) in [("no phase branch", false, true), ("no amplitude branch", true, false)] {
        let config = TrainConfig {
            batch_size: 1,
            patch_size: 16,
            model: ModelConfig {
                enable_phase_branch: phase,
                enable_amplitude_branch: amp,
                ..tiny_model_config(0)
            },
            ..TrainConfig::default()
        };
        let mut t = Trainer::new(config, data.clone()).map_err(|e| format!("{name}: {e}"))?;
        let r = t.step().map_err(|e| format!("{name}: {e}"))?;
        ensure(r.terms().iter().all(|(_, v)| v.is_finite()), format!("{name}: non-finite loss"))?;
        lines.push(format!("{name} total {:.4}", r.total));
    }
    Ok(lines.join(", "))
}

fn determinism() -> Outcome {
    let data = synthetic_pairs(3, 24);
    let config = TrainConfig {
        batch_size: 2,
        patch_size: 16,
        seed: 11,
        model: tiny_model_config(11),
        ..TrainConfig::default()
    };
    let run = |steps: u64| -> Result<(Vec<u8>, Vec<f64>), String> {
        let mut t = Trainer::new(config.clone(), data.clone()).map_err(|e| e.to_string())?;
        let mut losses = Vec::new();
        t.run_until(steps, |_, r| {
            losses.push(r.total);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        Ok((t.checkpoint().to_bytes().map_err(|e| e.to_string())?, losses))
    };
    let (bytes_a, losses) = run(6)?;
    let (bytes_b, _) = run(6)?;
    ensure(bytes_a == bytes_b, "two runs produced different checkpoints")?;

    let (mid, _) = run(3)?;
    let ck = Checkpoint::from_bytes(&mid).map_err(|e| e.to_string())?;
    let mut resumed = Trainer::resume(&ck, data.clone()).map_err(|e| e.to_string())?;
    let mut tail = Vec::new();
    resumed
        .run_until(6, |_, r| {
            tail.push(r.total);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(tail == losses[3..], "resumed trajectory diverged")?;
    let resumed_bytes = resumed.checkpoint().to_bytes().map_err(|e| e.to_string())?;
    ensure(resumed_bytes == bytes_a, "resumed checkpoint differs")?;
    Ok(format!("{} checkpoint bytes identical; resumed losses match bit-exactly", bytes_a.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("Fourier round trip and DFT oracle", fourier_round_trip),
    ("shift-theorem amplitude/phase split", shift_theorem_split),
    ("FARB/FPRB frequency-path invariants", block_invariants),
    ("gradient correctness", gradient_correctness),
    ("loss bookkeeping", loss_bookkeeping),
    ("metric oracles", metric_oracles),
    ("toy overfit", toy_overfit),
    ("schedule and parameter counts", schedule_and_params),
    ("ablation harness", ablation_harness),
    ("determinism and resume", determinism),
];

fn main() {
    // Listing for `cargo test -- --list`.
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in CRITERIA.iter().enumerate() {
            println!("criterion {}: {name}: test", i + 1);
        }
        return;
    }
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|n| n.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
