use fourierisp::fourier::{decompose, log_amplitude_view, phase_view, swap_amplitude};
use fourierisp::imaging::{demosaic, procedural_rgb, synthesize_raw, CfaPattern, DegradationParams, RawImage, RgbImage};
use fourierisp::{Error, Result};

pub fn from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<RgbImage> {
    if rgba.len() != width * height * 4 {
        return Err(Error::Dimension(format!(
            "{width}×{height} RGBA needs {} bytes, got {}",
            width * height * 4,
            rgba.len()
        )));
    }
    let rgb: Vec<u8> = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    RgbImage::from_rgb8(height, width, &rgb)
}

pub fn to_rgba(img: &RgbImage) -> Vec<u8> {
    img.to_rgb8().chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

pub fn procedural(width: usize, height: usize, seed: u64) -> Vec<u8> {
    to_rgba(&procedural_rgb(height, width, seed))
}

pub fn amplitude_swap(a: &[u8], b: &[u8], width: usize, height: usize) -> Result<(Vec<u8>, Vec<u8>)> {
    let a = from_rgba(a, width, height)?;
    let b = from_rgba(b, width, height)?;
    let (x, y) = swap_amplitude(a.tensor(), b.tensor())?;
    Ok((to_rgba(&RgbImage::from_tensor(x)?), to_rgba(&RgbImage::from_tensor(y)?)))
}

pub fn spectrum_views(rgba: &[u8], width: usize, height: usize) -> Result<(Vec<u8>, Vec<u8>)> {
    let img = from_rgba(rgba, width, height)?;
    let sp = decompose(img.tensor())?;
    Ok((
        to_rgba(&RgbImage::from_tensor(log_amplitude_view(&sp))?),
        to_rgba(&RgbImage::from_tensor(phase_view(&sp))?),
    ))
}

/// Each RAW sample drawn in the colour of its CFA site.
pub fn mosaic_view(raw: &RawImage) -> RgbImage {
    let mut img = RgbImage::zeros(raw.height(), raw.width());
    for y in 0..raw.height() {
        for x in 0..raw.width() {
            img.set(raw.cfa.color_at(y, x), y, x, raw.at(y, x));
        }
    }
    img
}

/// Synthesizes a RAW mosaic (unit gamma and gains, 10-bit, Gaussian noise
/// of standard deviation `noise`) and demosaics it again.
pub fn mosaic_demosaic(
    rgba: &[u8],
    width: usize,
    height: usize,
    cfa: CfaPattern,
    noise: f64,
    seed: u64,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let img = from_rgba(rgba, width, height)?;
    let params = DegradationParams {
        noise_read_sigma: noise,
        seed,
        ..DegradationParams::identity(10, cfa)
    };
    let raw = synthesize_raw(&img, &params)?;
    Ok((to_rgba(&mosaic_view(&raw)), to_rgba(&demosaic(&raw)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgba_round_trip() {
        let px = procedural(6, 4, 1);
        assert_eq!(px.len(), 96);
        assert_eq!(to_rgba(&from_rgba(&px, 6, 4).unwrap()), px);
        assert!(from_rgba(&px, 5, 4).is_err());
    }

    #[test]
    fn swapping_an_image_with_itself_is_identity() {
        let px = procedural(16, 12, 2);
        let (a, b) = amplitude_swap(&px, &px, 16, 12).unwrap();
        assert_eq!(a, px);
        assert_eq!(b, px);
    }

    #[test]
    fn views_have_image_size() {
        let (a, p) = spectrum_views(&procedural(10, 8, 3), 10, 8).unwrap();
        assert_eq!((a.len(), p.len()), (320, 320));
    }

    #[test]
    fn noiseless_mosaic_keeps_native_samples() {
        let px = procedural(8, 6, 4);
        let (mosaic, dem) = mosaic_demosaic(&px, 8, 6, CfaPattern::Grbg, 0.0, 0).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                let c = CfaPattern::Grbg.color_at(y, x);
                let i = (y * 8 + x) * 4 + c;
                assert!(px[i].abs_diff(dem[i]) <= 1);
                assert_eq!(mosaic[i], dem[i]);
            }
        }
        assert!(mosaic_demosaic(&procedural(7, 6, 4), 7, 6, CfaPattern::Rggb, 0.0, 0).is_err());
    }
}
