//! Full-reference image quality metrics: PSNR, SSIM, MS-SSIM and an
//! optional external LPIPS scorer.

mod report;

pub use report::{evaluate_pairs, EvalOptions, EvaluationReport, EvaluationRow, MetricReport};

use crate::error::{Error, Result};
use crate::imaging::rgb::RgbImage;
use crate::tensor::Tensor;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Normalized 1D Gaussian of odd length `size`.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Peak signal-to-noise ratio in dB; `+∞` when the images are identical.
pub fn psnr(a: &Tensor, b: &Tensor, peak: f64) -> Result<f64> {
    a.ensure_same_shape(b, "PSNR")?;
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

pub fn psnr_rgb(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    psnr(a.tensor(), b.tensor(), 1.0)
}

/// Separable filtering with periodic boundaries; output has the input's size.
fn blur_plane(src: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let r = k.len() / 2;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| src[y * w + (x + j + w * r - r) % w] * kv)
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| tmp[((y + j + h * r - r) % h) * w + x] * kv)
                .sum();
        }
    }
    out
}

/// Mean SSIM and mean contrast-structure term of one plane pair.
fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, window: &[f64], peak: f64) -> (f64, f64) {
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = blur_plane(a, h, w, window);
    let mu_b = blur_plane(b, h, w, window);
    let aa = blur_plane(&prod(|x, _| x * x), h, w, window);
    let bb = blur_plane(&prod(|_, y| y * y), h, w, window);
    let ab = blur_plane(&prod(|x, y| x * y), h, w, window);
    let n = mu_a.len() as f64;
    let (mut s_sum, mut cs_sum) = (0.0, 0.0);
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        let cs = (2.0 * cov + c2) / (va + vb + c2);
        s_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
        cs_sum += cs;
    }
    (s_sum / n, cs_sum / n)
}

fn check_pair(a: &Tensor, b: &Tensor, min: usize, what: &str) -> Result<()> {
    a.ensure_same_shape(b, what)?;
    if a.height() < min || a.width() < min {
        return Err(Error::dim(format!(
            "{what} needs images of at least {min}×{min}, got {}×{}",
            a.height(),
            a.width()
        )));
    }
    Ok(())
}

/// Structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// averaged over every pixel of every plane. Windows wrap around the image
/// borders, so the score is invariant to circular shifts of both inputs.
pub fn ssim(a: &Tensor, b: &Tensor) -> Result<f64> {
    check_pair(a, b, SSIM_WINDOW, "SSIM")?;
    let window = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let (h, w) = (a.height(), a.width());
    let planes = a.batch() * a.channels();
    let total: f64 = (0..planes)
        .map(|p| {
            let r = p * h * w..(p + 1) * h * w;
            ssim_plane(&a.data()[r.clone()], &b.data()[r], h, w, &window, 1.0).0
        })
        .sum();
    Ok(total / planes as f64)
}

pub fn ssim_rgb(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    ssim(a.tensor(), b.tensor())
}

/// Smallest side length accepted by [`ms_ssim`] for `levels` scales.
pub fn ms_ssim_min_size(levels: usize) -> usize {
    (1 << (levels - 1)) * SSIM_WINDOW
}

fn pool2(src: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            let i = 2 * y * w + 2 * x;
            out.push(0.25 * (src[i] + src[i + 1] + src[i + w] + src[i + w + 1]));
        }
    }
    (out, oh, ow)
}

/// Multi-scale SSIM with the canonical five weights (or the first
/// `levels`, renormalized). Per plane, the contrast-structure terms of the
/// finer scales and the full SSIM of the coarsest scale are clamped at
/// zero and combined as a weighted geometric product; planes are averaged.
pub fn ms_ssim(a: &Tensor, b: &Tensor, levels: usize) -> Result<f64> {
    if !(1..=MS_SSIM_WEIGHTS.len()).contains(&levels) {
        return Err(Error::Parameter(format!("MS-SSIM supports 1 to 5 levels, got {levels}")));
    }
    check_pair(a, b, ms_ssim_min_size(levels), "MS-SSIM")?;
    let weights = &MS_SSIM_WEIGHTS[..levels];
    let wsum: f64 = weights.iter().sum();
    let window = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let (h0, w0) = (a.height(), a.width());
    let planes = a.batch() * a.channels();
    let mut total = 0.0;
    for p in 0..planes {
        let r = p * h0 * w0..(p + 1) * h0 * w0;
        let (mut pa, mut pb) = (a.data()[r.clone()].to_vec(), b.data()[r].to_vec());
        let (mut h, mut w) = (h0, w0);
        let mut value = 1.0;
        for (l, &wl) in weights.iter().enumerate() {
            let (s, cs) = ssim_plane(&pa, &pb, h, w, &window, 1.0);
            let term = if l + 1 == levels { s } else { cs };
            value *= term.max(0.0).powf(wl / wsum);
            if l + 1 < levels {
                let (na, nh, nw) = pool2(&pa, h, w);
                pb = pool2(&pb, h, w).0;
                pa = na;
                (h, w) = (nh, nw);
            }
        }
        total += value;
    }
    Ok(total / planes as f64)
}

/// External perceptual scorer, e.g. an LPIPS implementation.
pub type Scorer<'a> = dyn FnMut(&RgbImage, &RgbImage) -> f64 + 'a;

/// Delegates to an external perceptual scorer when one is supplied.
pub fn lpips_hook<F>(a: &RgbImage, b: &RgbImage, scorer: Option<&mut F>) -> Option<f64>
where
    F: FnMut(&RgbImage, &RgbImage) -> f64 + ?Sized,
{
    scorer.map(|s| s(a, b))
}
