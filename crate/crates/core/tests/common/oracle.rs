//! Independent direct-formula references used by the tests.

use std::f64::consts::PI;

use fourierisp::Tensor;

/// Principal argument folded into (−π, π].
pub fn phase(re: f64, im: f64) -> f64 {
    let p = im.atan2(re);
    if p <= -PI { p + 2.0 * PI } else { p }
}

/// Direct O(N²) unitary DFT of one plane: (re, im).
pub fn naive_dft(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let norm = 1.0 / ((h * w) as f64).sqrt();
    let mut re = vec![0.0; h * w];
    let mut im = vec![0.0; h * w];
    for u in 0..h {
        for v in 0..w {
            for y in 0..h {
                for x in 0..w {
                    let t = -2.0 * PI * ((u * y) as f64 / h as f64 + (v * x) as f64 / w as f64);
                    re[u * w + v] += plane[y * w + x] * t.cos() * norm;
                    im[u * w + v] += plane[y * w + x] * t.sin() * norm;
                }
            }
        }
    }
    (re, im)
}

/// Mean over all planes of `f(spectrum(a), spectrum(b))` summed per bin.
pub fn spectral(a: &Tensor, b: &Tensor, f: impl Fn((f64, f64), (f64, f64)) -> f64) -> f64 {
    let (h, w) = (a.height(), a.width());
    let mut total = 0.0;
    for n in 0..a.batch() {
        for c in 0..a.channels() {
            let (ar, ai) = naive_dft(a.plane(n, c), h, w);
            let (br, bi) = naive_dft(b.plane(n, c), h, w);
            for i in 0..h * w {
                total += f((ar[i], ai[i]), (br[i], bi[i]));
            }
        }
    }
    total / a.len() as f64
}

/// SSIM and CS maps from a direct 2-D periodic window sum.
pub fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize) -> (f64, f64) {
    let sigma: f64 = 1.5;
    let g: Vec<f64> = (-5i32..=5).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = g.iter().sum::<f64>().powi(2);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let (mut s, mut cs) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in -5i64..=5 {
                for dx in -5i64..=5 {
                    let yy = (y as i64 + dy).rem_euclid(h as i64) as usize;
                    let xx = (x as i64 + dx).rem_euclid(w as i64) as usize;
                    let k = g[(dy + 5) as usize] * g[(dx + 5) as usize] / norm;
                    let (va, vb) = (a[yy * w + xx], b[yy * w + xx]);
                    ma += k * va;
                    mb += k * vb;
                    aa += k * va * va;
                    bb += k * vb * vb;
                    ab += k * va * vb;
                }
            }
            let c = (2.0 * (ab - ma * mb) + c2) / (aa - ma * ma + bb - mb * mb + c2);
            s += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1) * c;
            cs += c;
        }
    }
    let n = (h * w) as f64;
    (s / n, cs / n)
}

pub fn planes(t: &Tensor) -> impl Iterator<Item = &[f64]> {
    (0..t.batch()).flat_map(move |n| (0..t.channels()).map(move |c| t.plane(n, c)))
}

pub fn ssim(a: &Tensor, b: &Tensor) -> f64 {
    let (h, w) = (a.height(), a.width());
    let vals: Vec<f64> = planes(a).zip(planes(b)).map(|(p, q)| ssim_plane(p, q, h, w).0).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

pub fn pool(p: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for y in 0..h / 2 {
        for x in 0..w / 2 {
            out.push((p[2 * y * w + 2 * x] + p[2 * y * w + 2 * x + 1] + p[(2 * y + 1) * w + 2 * x] + p[(2 * y + 1) * w + 2 * x + 1]) / 4.0);
        }
    }
    out
}

pub fn ms_ssim(a: &Tensor, b: &Tensor) -> f64 {
    let weights = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let wsum: f64 = weights.iter().sum();
    let mut total = 0.0;
    let mut count = 0;
    for (p, q) in planes(a).zip(planes(b)) {
        let (mut p, mut q, mut h, mut w) = (p.to_vec(), q.to_vec(), a.height(), a.width());
        let mut v = 1.0;
        for (l, wl) in weights.iter().enumerate() {
            let (s, cs) = ssim_plane(&p, &q, h, w);
            let term: f64 = if l == 4 { s } else { cs };
            v *= term.max(0.0).powf(wl / wsum);
            p = pool(&p, h, w);
            q = pool(&q, h, w);
            h /= 2;
            w /= 2;
        }
        total += v;
        count += 1;
    }
    total / count as f64
}

