//! Synthetic RAW generation from clean sRGB images.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::raw::{max_code, CfaPattern, RawImage};
use super::rgb::RgbImage;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    /// Exponent applied to sRGB values to undo display gamma.
    pub inverse_gamma: f64,
    /// Per-channel white-balance gains the sensor values are divided by.
    pub wb_gains: [f64; 3],
    pub noise_read_sigma: f64,
    pub noise_shot_gain: f64,
    pub bit_depth: u8,
    pub cfa: CfaPattern,
    pub seed: u64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            inverse_gamma: 2.2,
            wb_gains: [2.0, 1.0, 1.6],
            noise_read_sigma: 0.002,
            noise_shot_gain: 0.0005,
            bit_depth: 10,
            cfa: CfaPattern::Rggb,
            seed: 0,
        }
    }
}

impl DegradationParams {
    /// Unit gamma and gains, no noise.
    pub fn identity(bit_depth: u8, cfa: CfaPattern) -> Self {
        Self {
            inverse_gamma: 1.0,
            wb_gains: [1.0; 3],
            noise_read_sigma: 0.0,
            noise_shot_gain: 0.0,
            bit_depth,
            cfa,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inverse_gamma.is_finite() && self.inverse_gamma > 0.0) {
            return Err(Error::Parameter(format!("inverse gamma must be positive, got {}", self.inverse_gamma)));
        }
        if self.wb_gains.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(Error::Parameter(format!("white-balance gains must be positive, got {:?}", self.wb_gains)));
        }
        if self.noise_read_sigma.is_nan() || self.noise_read_sigma < 0.0 || self.noise_shot_gain.is_nan() || self.noise_shot_gain < 0.0 {
            return Err(Error::Parameter("noise parameters must be nonnegative".into()));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(Error::Parameter(format!("unsupported bit depth {}", self.bit_depth)));
        }
        Ok(())
    }
}

/// Linearizes, white-balances, mosaics, adds signal-dependent Gaussian
/// noise (variance `σ_read² + gain·signal`), quantizes and clamps.
pub fn synthesize_raw(rgb: &RgbImage, params: &DegradationParams) -> Result<RawImage> {
    params.validate()?;
    let (h, w) = (rgb.height(), rgb.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!("synthesis needs even dims, got {h}×{w}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let levels = f64::from(max_code(params.bit_depth));
    let mut data = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let c = params.cfa.color_at(y, x);
            let v = rgb.at(c, y, x).clamp(0.0, 1.0);
            let signal = v.powf(params.inverse_gamma) / params.wb_gains[c];
            let var = params.noise_read_sigma.powi(2) + params.noise_shot_gain * signal;
            let z: f64 = StandardNormal.sample(&mut rng);
            let noisy = signal + var.sqrt() * z;
            data.push(((noisy * levels).round() / levels).clamp(0.0, 1.0));
        }
    }
    RawImage::new(h, w, data, params.bit_depth, params.cfa)
}

/// Smooth procedural test image: blended colour gradients, soft discs and
/// a low-frequency texture. Deterministic per seed.
pub fn procedural_rgb(height: usize, width: usize, seed: u64) -> RgbImage {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corners: Vec<[f64; 3]> = (0..4)
        .map(|_| [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)])
        .collect();
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.15..0.85),
                rng.random_range(0.15..0.85),
                rng.random_range(0.08..0.25),
                [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
            )
        })
        .collect();
    let (fx, fy, phase) = (
        rng.random_range(1.0..3.0),
        rng.random_range(1.0..3.0),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    RgbImage::from_fn(height, width, |c, y, x| {
        let u = (x as f64 + 0.5) / width as f64;
        let v = (y as f64 + 0.5) / height as f64;
        let mut val = corners[0][c] * (1.0 - u) * (1.0 - v)
            + corners[1][c] * u * (1.0 - v)
            + corners[2][c] * (1.0 - u) * v
            + corners[3][c] * u * v;
        for &(cx, cy, r, col) in &discs {
            let d = ((u - cx).powi(2) + (v - cy).powi(2)).sqrt();
            let a = 1.0 / (1.0 + ((d - r) / 0.02).exp());
            val = val * (1.0 - a) + col[c] * a;
        }
        val += 0.05 * (std::f64::consts::TAU * (fx * u + fy * v) + phase).sin();
        val.clamp(0.0, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::demosaic::demosaic;

    #[test]
    fn zero_image_gives_zero_raw() {
        let params = DegradationParams {
            noise_read_sigma: 0.0,
            noise_shot_gain: 0.01,
            seed: 3,
            ..DegradationParams::default()
        };
        let raw = synthesize_raw(&RgbImage::zeros(8, 8), &params).unwrap();
        assert!(raw.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_params_sample_and_quantize() {
        let rgb = procedural_rgb(8, 10, 1);
        for cfa in CfaPattern::ALL {
            let raw = synthesize_raw(&rgb, &DegradationParams::identity(10, cfa)).unwrap();
            for y in 0..8 {
                for x in 0..10 {
                    let expect = (rgb.at(cfa.color_at(y, x), y, x) * 1023.0).round() / 1023.0;
                    assert_eq!(raw.at(y, x), expect);
                }
            }
            // Native samples survive demosaicing up to one quantization step.
            let dem = demosaic(&raw).unwrap();
            for y in 0..8 {
                for x in 0..10 {
                    let c = cfa.color_at(y, x);
                    assert!((dem.at(c, y, x) - rgb.at(c, y, x)).abs() <= 1.0 / 1023.0);
                }
            }
        }
    }

    #[test]
    fn quantized_to_code_grid_and_deterministic() {
        let rgb = procedural_rgb(16, 16, 2);
        let params = DegradationParams {
            bit_depth: 12,
            seed: 99,
            ..DegradationParams::default()
        };
        let a = synthesize_raw(&rgb, &params).unwrap();
        let b = synthesize_raw(&rgb, &params).unwrap();
        assert_eq!(a, b);
        for &v in a.data() {
            let code = v * 4095.0;
            assert!((code - code.round()).abs() < 1e-9 && (0.0..=1.0).contains(&v));
        }
        let c = synthesize_raw(&rgb, &DegradationParams { seed: 100, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        let rgb = RgbImage::zeros(4, 4);
        let bad_gamma = DegradationParams {
            inverse_gamma: 0.0,
            ..DegradationParams::default()
        };
        assert!(matches!(synthesize_raw(&rgb, &bad_gamma), Err(Error::Parameter(_))));
        let bad_gain = DegradationParams {
            wb_gains: [1.0, -1.0, 1.0],
            ..DegradationParams::default()
        };
        assert!(matches!(synthesize_raw(&rgb, &bad_gain), Err(Error::Parameter(_))));
    }
}
