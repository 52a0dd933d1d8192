//! Bilinear demosaicing with mirror (reflect-101) borders.
//!
//! Reflect-101 maps index `-1` to `1` and `n` to `n − 2`, which keeps the
//! CFA parity of every mirrored neighbour intact.

use super::raw::RawImage;
use super::rgb::RgbImage;
use crate::error::{Error, Result};

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

pub fn demosaic(raw: &RawImage) -> Result<RgbImage> {
    let (h, w) = (raw.height(), raw.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!("cannot demosaic odd-sized RAW {h}×{w}")));
    }
    let cfa = raw.cfa;
    let px = |y: isize, x: isize| raw.at(reflect(y, h), reflect(x, w));
    let mut out = RgbImage::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let native = cfa.color_at(y, x);
            let (yi, xi) = (y as isize, x as isize);
            let cross = 0.25 * (px(yi - 1, xi) + px(yi + 1, xi) + px(yi, xi - 1) + px(yi, xi + 1));
            let diag = 0.25 * (px(yi - 1, xi - 1) + px(yi - 1, xi + 1) + px(yi + 1, xi - 1) + px(yi + 1, xi + 1));
            let horiz = 0.5 * (px(yi, xi - 1) + px(yi, xi + 1));
            let vert = 0.5 * (px(yi - 1, xi) + px(yi + 1, xi));
            // Colour of the horizontal neighbours of this site.
            let row_color = cfa.color_at(y, x + 1);
            for c in 0..3 {
                let v = if c == native {
                    raw.at(y, x)
                } else if c == 1 {
                    cross
                } else if native == 1 {
                    if row_color == c {
                        horiz
                    } else {
                        vert
                    }
                } else {
                    diag
                };
                out.set(c, y, x, v);
            }
        }
    }
    Ok(out)
}
