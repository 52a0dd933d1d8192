//! Unitary 2D discrete Fourier analysis of real images and feature maps.
//!
//! The forward transform carries the `1/√(HW)` factor and so does the
//! inverse, which makes the pair unitary (Parseval holds without extra
//! scaling). DC sits at index `(0, 0)`; nothing is ever shifted.
//!
//! Amplitude is `√(re² + im²)` and phase is `atan2(im, re)` folded into
//! `(−π, π]`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Largest imaginary residue tolerated by [`recompose`].
pub const HERMITIAN_RESIDUE_TOL: f64 = 1e-4;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unitary 2D transform of one row-major `h × w` plane.
pub fn fft2_plane(buf: &mut [Complex<f64>], h: usize, w: usize, direction: FftDirection) {
    debug_assert_eq!(buf.len(), h * w);
    let (row_fft, col_fft) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft(w, direction), p.plan_fft(h, direction))
    });
    let scratch_len = row_fft
        .get_inplace_scratch_len()
        .max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex::default(); scratch_len];
    for row in buf.chunks_exact_mut(w) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex::default(); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process_with_scratch(&mut col, &mut scratch);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
    let norm = 1.0 / ((h * w) as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= norm;
    }
}

/// Per-plane unitary transform of a real tensor into `(re, im)` tensors.
pub fn spectrum(x: &Tensor) -> (Tensor, Tensor) {
    let (h, w) = (x.height(), x.width());
    let mut re = Tensor::zeros(x.shape());
    let mut im = Tensor::zeros(x.shape());
    let mut buf = vec![Complex::default(); h * w];
    for n in 0..x.batch() {
        for c in 0..x.channels() {
            for (b, &v) in buf.iter_mut().zip(x.plane(n, c)) {
                *b = Complex::new(v, 0.0);
            }
            fft2_plane(&mut buf, h, w, FftDirection::Forward);
            for ((r, i), b) in re
                .plane_mut(n, c)
                .iter_mut()
                .zip(im.plane_mut(n, c).iter_mut())
                .zip(&buf)
            {
                *r = b.re;
                *i = b.im;
            }
        }
    }
    (re, im)
}

/// Per-plane unitary inverse transform of `re + i·im`, returning both the
/// real part and the imaginary part of the result.
pub fn inverse_spectrum(re: &Tensor, im: &Tensor) -> (Tensor, Tensor) {
    let (h, w) = (re.height(), re.width());
    let mut out_re = Tensor::zeros(re.shape());
    let mut out_im = Tensor::zeros(re.shape());
    let mut buf = vec![Complex::default(); h * w];
    for n in 0..re.batch() {
        for c in 0..re.channels() {
            for ((b, &r), &i) in buf.iter_mut().zip(re.plane(n, c)).zip(im.plane(n, c)) {
                *b = Complex::new(r, i);
            }
            fft2_plane(&mut buf, h, w, FftDirection::Inverse);
            for ((r, i), b) in out_re
                .plane_mut(n, c)
                .iter_mut()
                .zip(out_im.plane_mut(n, c).iter_mut())
                .zip(&buf)
            {
                *r = b.re;
                *i = b.im;
            }
        }
    }
    (out_re, out_im)
}

/// `atan2` folded into `(−π, π]`.
#[inline]
pub fn phase_of(re: f64, im: f64) -> f64 {
    let p = im.atan2(re);
    if p <= -PI {
        PI
    } else {
        p
    }
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_phase(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Amplitude and phase of every channel of a real array.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPair {
    pub amplitude: Tensor,
    pub phase: Tensor,
    /// Normalization applied on the forward transform, `1/√(HW)`.
    pub norm_factor: f64,
}

impl SpectralPair {
    pub fn shape(&self) -> [usize; 4] {
        self.amplitude.shape()
    }
}

pub fn decompose(x: &Tensor) -> Result<SpectralPair> {
    if x.height() == 0 || x.width() == 0 {
        return Err(Error::dim("decompose needs H, W >= 1"));
    }
    if !x.all_finite() {
        return Err(Error::Numeric("decompose input contains non-finite values".into()));
    }
    let (re, im) = spectrum(x);
    let amplitude = re.zip_map(&im, |r, i| r.hypot(i));
    let phase = re.zip_map(&im, phase_of);
    Ok(SpectralPair {
        amplitude,
        phase,
        norm_factor: 1.0 / (x.plane_len() as f64).sqrt(),
    })
}

/// Inverse of [`decompose`]. The spectrum must describe a real signal: an
/// imaginary residue above [`HERMITIAN_RESIDUE_TOL`] is reported as an error.
pub fn recompose(sp: &SpectralPair) -> Result<Tensor> {
    sp.amplitude.ensure_same_shape(&sp.phase, "recompose")?;
    if sp.amplitude.data().iter().any(|&a| a < 0.0) {
        return Err(Error::Parameter("recompose needs a nonnegative amplitude".into()));
    }
    let (out, residue) = recompose_with_residue(sp);
    let residue = residue.max_abs();
    if !residue.is_finite() || residue >= HERMITIAN_RESIDUE_TOL {
        return Err(Error::Numeric(format!(
            "spectrum is not Hermitian: imaginary residue {residue:e}"
        )));
    }
    Ok(out)
}

/// Inverse transform of `A·e^{iφ}` without the Hermitian check; returns
/// the real part and the discarded imaginary part.
pub fn recompose_with_residue(sp: &SpectralPair) -> (Tensor, Tensor) {
    let re = sp.amplitude.zip_map(&sp.phase, |a, p| a * p.cos());
    let im = sp.amplitude.zip_map(&sp.phase, |a, p| a * p.sin());
    inverse_spectrum(&re, &im)
}

/// Exchanges amplitude spectra: returns `(A(b)·P(a), A(a)·P(b))`.
pub fn swap_amplitude(a: &Tensor, b: &Tensor) -> Result<(Tensor, Tensor)> {
    a.ensure_same_shape(b, "swap_amplitude")?;
    let sa = decompose(a)?;
    let sb = decompose(b)?;
    let first = SpectralPair {
        amplitude: sb.amplitude.clone(),
        phase: sa.phase.clone(),
        norm_factor: sa.norm_factor,
    };
    let second = SpectralPair {
        amplitude: sa.amplitude,
        phase: sb.phase,
        norm_factor: sb.norm_factor,
    };
    Ok((
        recompose_with_residue(&first).0,
        recompose_with_residue(&second).0,
    ))
}

/// `ln(1 + A)` per channel, rescaled to `[0, 1]` by the channel maximum.
pub fn log_amplitude_view(sp: &SpectralPair) -> Tensor {
    let mut out = sp.amplitude.map(f64::ln_1p);
    for n in 0..out.batch() {
        for c in 0..out.channels() {
            let plane = out.plane_mut(n, c);
            let max = plane.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                plane.iter_mut().for_each(|v| *v /= max);
            }
        }
    }
    out
}

/// Phase mapped linearly from `(−π, π]` to `(0, 1]`.
pub fn phase_view(sp: &SpectralPair) -> Tensor {
    sp.phase.map(|p| (p + PI) / (2.0 * PI))
}
