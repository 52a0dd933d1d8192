//! PNG storage: 8-bit RGB for sRGB images, 16-bit grayscale integer codes
//! for RAW mosaics.

use std::path::Path;

use image::{ColorType, ImageBuffer, Luma, Rgb};

use super::raw::{CfaPattern, RawImage};
use super::rgb::RgbImage;
use crate::error::{Error, Result};

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(image_err(path))?.into_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::from_rgb8(h as usize, w as usize, img.as_raw())
}

pub fn write_rgb_png(path: &Path, rgb: &RgbImage) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(rgb.width() as u32, rgb.height() as u32, rgb.to_rgb8())
            .expect("buffer length matches dims");
    buf.save(path).map_err(image_err(path))
}

/// Reads a 16-bit single-channel PNG of integer codes and normalizes by
/// `2^bits − 1`.
pub fn read_raw_png(path: &Path, bit_depth: u8, cfa: CfaPattern) -> Result<RawImage> {
    let img = image::open(path).map_err(image_err(path))?;
    if img.color() != ColorType::L16 {
        return Err(Error::Parameter(format!(
            "{}: RAW PNG must be 16-bit grayscale, found {:?}",
            path.display(),
            img.color()
        )));
    }
    let img = img.into_luma16();
    let (w, h) = img.dimensions();
    let max = (1u32 << bit_depth) - 1;
    let mut data = Vec::with_capacity((w * h) as usize);
    for &code in img.as_raw() {
        if u32::from(code) > max {
            return Err(Error::Parameter(format!(
                "{}: code {code} exceeds {bit_depth}-bit range",
                path.display()
            )));
        }
        data.push(f64::from(code) / f64::from(max));
    }
    RawImage::new(h as usize, w as usize, data, bit_depth, cfa)
}

pub fn write_raw_png(path: &Path, raw: &RawImage) -> Result<()> {
    let max = f64::from(raw.max_code());
    let codes: Vec<u16> = raw
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * max).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(raw.width() as u32, raw.height() as u32, codes).expect("buffer length matches dims");
    buf.save(path).map_err(image_err(path))
}

pub fn png_dimensions(path: &Path) -> Result<(usize, usize)> {
    let (w, h) = image::image_dimensions(path).map_err(image_err(path))?;
    Ok((h as usize, w as usize))
}
