//! Raw numeric kernels shared by forward and backward passes.

use crate::tensor::Tensor;

/// Unfolds one `[c, h, w]` item into a `[c·k·k, h·w]` column matrix for a
/// stride-1 convolution with zero padding `k / 2`.
pub(crate) fn im2col(x: &[f64], c: usize, h: usize, w: usize, k: usize, cols: &mut [f64]) {
    let pad = (k / 2) as isize;
    let hw = h * w;
    for ci in 0..c {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let dy = ky as isize - pad;
                let dx = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + dy;
                    let out = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx.max(0)) as usize;
                    out[..x0.min(w)].fill(0.0);
                    if x1 > x0 {
                        let s0 = (x0 as isize + dx) as usize;
                        out[x0..x1].copy_from_slice(&src[s0..s0 + (x1 - x0)]);
                    }
                    out[x1.max(x0).min(w)..].fill(0.0);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back into a `[c, h, w]` item.
pub(crate) fn col2im(cols: &[f64], c: usize, h: usize, w: usize, k: usize, dx: &mut [f64]) {
    let pad = (k / 2) as isize;
    let hw = h * w;
    for ci in 0..c {
        let plane = &mut dx[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * hw..][..hw];
                let oy = ky as isize - pad;
                let ox = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + oy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let x0 = (-ox).max(0) as usize;
                    let x1 = (w as isize - ox.max(0)) as usize;
                    if x1 <= x0 {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let s0 = (x0 as isize + ox) as usize;
                    for (d, &v) in dst[s0..s0 + (x1 - x0)].iter_mut().zip(&row[y * w + x0..y * w + x1]) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// `C (m×n) = alpha · op(A) · op(B) + beta · C` on row-major buffers with
/// explicit strides.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    // SAFETY: the caller provides buffers whose extents cover the strided
    // views: `a` is m×k, `b` is k×n, and `c` is an m×n row-major block
    // (checked above).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn conv2d_forward(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Tensor {
    let [n, cin, h, wd] = x.shape();
    let [cout, _, k, _] = w.shape();
    let hw = h * wd;
    let kk = cin * k * k;
    let mut out = Tensor::zeros([n, cout, h, wd]);
    let mut cols = if k == 1 { Vec::new() } else { vec![0.0; kk * hw] };
    for item in 0..n {
        let xi = &x.data()[item * cin * hw..(item + 1) * cin * hw];
        let cols_ref: &[f64] = if k == 1 {
            xi
        } else {
            im2col(xi, cin, h, wd, k, &mut cols);
            &cols
        };
        let oi = &mut out.data_mut()[item * cout * hw..(item + 1) * cout * hw];
        if let Some(b) = b {
            for (co, plane) in oi.chunks_exact_mut(hw).enumerate() {
                plane.fill(b.data()[co]);
            }
        }
        let beta = if b.is_some() { 1.0 } else { 0.0 };
        gemm(
            cout,
            kk,
            hw,
            w.data(),
            (kk as isize, 1),
            cols_ref,
            (hw as isize, 1),
            beta,
            oi,
        );
    }
    out
}

/// Gradients of a convolution with respect to input, weight and bias.
pub(crate) fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    g: &Tensor,
    need_x: bool,
    need_w: bool,
    need_b: bool,
) -> (Option<Tensor>, Option<Tensor>, Option<Tensor>) {
    let [n, cin, h, wd] = x.shape();
    let [cout, _, k, _] = w.shape();
    let hw = h * wd;
    let kk = cin * k * k;
    let mut dx = need_x.then(|| Tensor::zeros(x.shape()));
    let mut dw = need_w.then(|| Tensor::zeros(w.shape()));
    let db = need_b.then(|| {
        let mut db = Tensor::zeros([1, cout, 1, 1]);
        for item in 0..n {
            for co in 0..cout {
                db.data_mut()[co] += g.plane(item, co).iter().sum::<f64>();
            }
        }
        db
    });
    let mut cols = if k == 1 { Vec::new() } else { vec![0.0; kk * hw] };
    let mut dcols = if need_x && k > 1 { vec![0.0; kk * hw] } else { Vec::new() };
    for item in 0..n {
        let gi = &g.data()[item * cout * hw..(item + 1) * cout * hw];
        let xi = &x.data()[item * cin * hw..(item + 1) * cin * hw];
        if let Some(dw) = dw.as_mut() {
            let cols_ref: &[f64] = if k == 1 {
                xi
            } else {
                im2col(xi, cin, h, wd, k, &mut cols);
                &cols
            };
            // dW += G · colsᵀ
            gemm(
                cout,
                hw,
                kk,
                gi,
                (hw as isize, 1),
                cols_ref,
                (1, hw as isize),
                1.0,
                dw.data_mut(),
            );
        }
        if let Some(dx) = dx.as_mut() {
            let dxi = &mut dx.data_mut()[item * cin * hw..(item + 1) * cin * hw];
            if k == 1 {
                // dX = Wᵀ · G
                gemm(cin, cout, hw, w.data(), (1, kk as isize), gi, (hw as isize, 1), 0.0, dxi);
            } else {
                gemm(
                    kk,
                    cout,
                    hw,
                    w.data(),
                    (1, kk as isize),
                    gi,
                    (hw as isize, 1),
                    0.0,
                    &mut dcols,
                );
                col2im(&dcols, cin, h, wd, k, dxi);
            }
        }
    }
    (dx, dw, db)
}

/// Separable "valid" filtering of every plane with a symmetric 1D kernel.
pub(crate) fn blur_valid(x: &Tensor, kernel: &[f64]) -> Tensor {
    let [n, c, h, w] = x.shape();
    let k = kernel.len();
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut out = Tensor::zeros([n, c, oh, ow]);
    let mut tmp = vec![0.0; h * ow];
    for ni in 0..n {
        for ci in 0..c {
            let src = x.plane(ni, ci);
            for y in 0..h {
                for xo in 0..ow {
                    let row = &src[y * w + xo..y * w + xo + k];
                    tmp[y * ow + xo] = row.iter().zip(kernel).map(|(a, b)| a * b).sum();
                }
            }
            let dst = out.plane_mut(ni, ci);
            for yo in 0..oh {
                for xo in 0..ow {
                    let mut s = 0.0;
                    for (j, &kv) in kernel.iter().enumerate() {
                        s += tmp[(yo + j) * ow + xo] * kv;
                    }
                    dst[yo * ow + xo] = s;
                }
            }
        }
    }
    out
}

pub(crate) fn blur_valid_backward(g: &Tensor, kernel: &[f64], in_shape: [usize; 4]) -> Tensor {
    let [n, c, h, w] = in_shape;
    let (oh, ow) = (g.height(), g.width());
    let mut dx = Tensor::zeros(in_shape);
    let mut tmp = vec![0.0; h * ow];
    for ni in 0..n {
        for ci in 0..c {
            tmp.fill(0.0);
            let gp = g.plane(ni, ci);
            for yo in 0..oh {
                for xo in 0..ow {
                    let v = gp[yo * ow + xo];
                    for (j, &kv) in kernel.iter().enumerate() {
                        tmp[(yo + j) * ow + xo] += v * kv;
                    }
                }
            }
            let dst = dx.plane_mut(ni, ci);
            for y in 0..h {
                for xo in 0..ow {
                    let v = tmp[y * ow + xo];
                    for (j, &kv) in kernel.iter().enumerate() {
                        dst[y * w + xo + j] += v * kv;
                    }
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_conv(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
        let [n, cin, h, wd] = x.shape();
        let [cout, _, k, _] = w.shape();
        let p = (k / 2) as isize;
        Tensor::from_fn([n, cout, h, wd], |[ni, co, y, xx]| {
            let mut s = b.data()[co];
            for ci in 0..cin {
                for ky in 0..k {
                    for kx in 0..k {
                        let sy = y as isize + ky as isize - p;
                        let sx = xx as isize + kx as isize - p;
                        if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < wd {
                            s += w.at([co, ci, ky, kx]) * x.at([ni, ci, sy as usize, sx as usize]);
                        }
                    }
                }
            }
            s
        })
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut seed = 1u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for k in [1, 3, 5] {
            let x = Tensor::from_fn([2, 3, 5, 7], |_| next());
            let w = Tensor::from_fn([4, 3, k, k], |_| next());
            let b = Tensor::from_fn([1, 4, 1, 1], |_| next());
            let fast = conv2d_forward(&x, &w, Some(&b));
            assert!(fast.max_abs_diff(&direct_conv(&x, &w, &b)) < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        let (c, h, w, k) = (2, 4, 5, 3);
        let x: Vec<f64> = (0..c * h * w).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..c * k * k * h * w).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut cols = vec![0.0; y.len()];
        im2col(&x, c, h, w, k, &mut cols);
        let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mut back = vec![0.0; x.len()];
        col2im(&y, c, h, w, k, &mut back);
        let rhs: f64 = back.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
