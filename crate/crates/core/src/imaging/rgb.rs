use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Three-channel image stored planar as a `[1, 3, H, W]` tensor. Values
/// are nominally in `[0, 1]`; they are only clamped when written out.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    data: Tensor,
}

impl RgbImage {
    pub fn from_tensor(data: Tensor) -> Result<Self> {
        let [n, c, h, w] = data.shape();
        if n != 1 || c != 3 || h == 0 || w == 0 {
            return Err(Error::dim(format!("RGB image needs shape [1, 3, H, W], got {:?}", data.shape())));
        }
        Ok(Self { data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            data: Tensor::zeros([1, 3, height, width]),
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        Self {
            data: Tensor::from_fn([1, 3, height, width], |[_, c, y, x]| f(c, y, x)),
        }
    }

    pub fn height(&self) -> usize {
        self.data.height()
    }

    pub fn width(&self) -> usize {
        self.data.width()
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data.at([0, c, y, x])
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data.set([0, c, y, x], v)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.data
    }

    pub fn into_tensor(self) -> Tensor {
        self.data
    }

    pub fn clamped(&self) -> RgbImage {
        RgbImage {
            data: self.data.map(|v| v.clamp(0.0, 1.0)),
        }
    }

    /// Clamped and rounded to the nearest 8-bit level, still in `[0, 1]`.
    pub fn quantized_8bit(&self) -> RgbImage {
        RgbImage {
            data: self.data.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0),
        }
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<RgbImage> {
        if top + height > self.height() || left + width > self.width() {
            return Err(Error::dim(format!(
                "crop {height}×{width} at ({top}, {left}) exceeds {}×{}",
                self.height(),
                self.width()
            )));
        }
        Ok(RgbImage::from_fn(height, width, |c, y, x| self.at(c, top + y, left + x)))
    }

    /// Interleaved 8-bit RGB bytes, row-major.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let (h, w) = (self.height(), self.width());
        let mut out = Vec::with_capacity(h * w * 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    out.push((self.at(c, y, x).clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
        }
        out
    }

    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != height * width * 3 {
            return Err(Error::dim(format!(
                "{height}×{width} RGB needs {} bytes, got {}",
                height * width * 3,
                bytes.len()
            )));
        }
        Ok(RgbImage::from_fn(height, width, |c, y, x| {
            f64::from(bytes[(y * width + x) * 3 + c]) / 255.0
        }))
    }
}
