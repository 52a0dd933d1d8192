use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// 2×2 Bayer tile layout, named by its sites in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

/// Site kinds after packing, in packed channel order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    R = 0,
    Gr = 1,
    Gb = 2,
    B = 3,
}

impl Site {
    /// RGB channel sampled by the site.
    pub fn color(self) -> usize {
        match self {
            Site::R => 0,
            Site::Gr | Site::Gb => 1,
            Site::B => 2,
        }
    }
}

impl CfaPattern {
    pub const ALL: [CfaPattern; 4] = [CfaPattern::Rggb, CfaPattern::Bggr, CfaPattern::Grbg, CfaPattern::Gbrg];

    /// Sites of the 2×2 tile as `[(0,0), (0,1), (1,0), (1,1)]`. The green
    /// sharing a row with red is `Gr`.
    pub fn tile(self) -> [Site; 4] {
        use Site::*;
        match self {
            CfaPattern::Rggb => [R, Gr, Gb, B],
            CfaPattern::Bggr => [B, Gb, Gr, R],
            CfaPattern::Grbg => [Gr, R, B, Gb],
            CfaPattern::Gbrg => [Gb, B, R, Gr],
        }
    }

    #[inline]
    pub fn site_at(self, y: usize, x: usize) -> Site {
        self.tile()[(y & 1) << 1 | (x & 1)]
    }

    /// RGB channel (0, 1, 2) sampled at `(y, x)`.
    #[inline]
    pub fn color_at(self, y: usize, x: usize) -> usize {
        self.site_at(y, x).color()
    }

    /// Offset `(dy, dx)` of `site` within the tile.
    pub fn offset_of(self, site: Site) -> (usize, usize) {
        let i = self.tile().iter().position(|&s| s == site).expect("every tile holds all four sites");
        (i >> 1, i & 1)
    }
}

impl fmt::Display for CfaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CfaPattern::Rggb => "RGGB",
            CfaPattern::Bggr => "BGGR",
            CfaPattern::Grbg => "GRBG",
            CfaPattern::Gbrg => "GBRG",
        })
    }
}

impl FromStr for CfaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RGGB" => Ok(CfaPattern::Rggb),
            "BGGR" => Ok(CfaPattern::Bggr),
            "GRBG" => Ok(CfaPattern::Grbg),
            "GBRG" => Ok(CfaPattern::Gbrg),
            other => Err(Error::Parameter(format!("unknown CFA pattern `{other}`"))),
        }
    }
}

/// Single-channel Bayer mosaic with intensities normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
    pub bit_depth: u8,
    pub cfa: CfaPattern,
}

impl RawImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>, bit_depth: u8, cfa: CfaPattern) -> Result<Self> {
        if !height.is_multiple_of(2) || !width.is_multiple_of(2) || height == 0 || width == 0 {
            return Err(Error::dim(format!("RAW dims must be even and nonzero, got {height}×{width}")));
        }
        if data.len() != height * width {
            return Err(Error::dim(format!(
                "RAW {height}×{width} needs {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        if !(1..=16).contains(&bit_depth) {
            return Err(Error::Parameter(format!("unsupported bit depth {bit_depth}")));
        }
        Ok(Self {
            height,
            width,
            data,
            bit_depth,
            cfa,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Largest integer code, `2^bits − 1`.
    pub fn max_code(&self) -> u32 {
        max_code(self.bit_depth)
    }

    /// Crop with the top-left corner rounded down to even coordinates so
    /// the CFA phase is preserved.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<RawImage> {
        let (top, left) = (top & !1, left & !1);
        if top + height > self.height || left + width > self.width {
            return Err(Error::dim(format!(
                "crop {height}×{width} at ({top}, {left}) exceeds {}×{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for y in top..top + height {
            data.extend_from_slice(&self.data[y * self.width + left..y * self.width + left + width]);
        }
        RawImage::new(height, width, data, self.bit_depth, self.cfa)
    }
}

pub fn max_code(bit_depth: u8) -> u32 {
    (1u32 << bit_depth) - 1
}

/// Half-resolution, four-channel rearrangement of a mosaic. Channels are
/// always `(R, G_r, G_b, B)` whatever the source CFA.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedRaw {
    /// `[1, 4, H/2, W/2]`.
    pub data: Tensor,
}

impl PackedRaw {
    pub fn height(&self) -> usize {
        self.data.height()
    }

    pub fn width(&self) -> usize {
        self.data.width()
    }
}

pub fn pack_bayer(raw: &RawImage) -> Result<PackedRaw> {
    let (h, w) = (raw.height, raw.width);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!("cannot pack odd-sized RAW {h}×{w}")));
    }
    let mut t = Tensor::zeros([1, 4, h / 2, w / 2]);
    for y in 0..h {
        for x in 0..w {
            let site = raw.cfa.site_at(y, x) as usize;
            t.set([0, site, y / 2, x / 2], raw.at(y, x));
        }
    }
    Ok(PackedRaw { data: t })
}

/// Inverse index map of [`pack_bayer`].
pub fn unpack_bayer(packed: &PackedRaw, bit_depth: u8, cfa: CfaPattern) -> Result<RawImage> {
    let (h, w) = (packed.height() * 2, packed.width() * 2);
    let mut data = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            data[y * w + x] = packed.data.at([0, cfa.site_at(y, x) as usize, y / 2, x / 2]);
        }
    }
    RawImage::new(h, w, data, bit_depth, cfa)
}
