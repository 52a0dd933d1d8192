//! Tape-based reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Graph`] records every operation as a node holding its forward
//! value. [`Graph::backward`] walks the tape in reverse and returns
//! gradients for every node that depends on a leaf created with
//! `requires_grad`. Nodes that depend only on constants are never
//! differentiated.

pub mod check;
pub(crate) mod kernels;

use std::rc::Rc;

use crate::fourier::{self, phase_of};
use crate::tensor::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum Part {
    Re,
    Im,
}

enum Op {
    Leaf,
    Conv2d { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Affine { x: Var, scale: f64 },
    LeakyRelu { x: Var, slope: f64 },
    Softplus(Var),
    Cos(Var),
    Sin(Var),
    Spectrum { x: Var, part: Part },
    InverseSpectrumReal { re: Var, im: Var },
    Magnitude { re: Var, im: Var },
    Angle { re: Var, im: Var },
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    PixelShuffle { x: Var },
    AvgPool2(Var),
    Upsample2(Var),
    InstanceNorm { x: Var, inv_std: Vec<f64> },
    ChannelAffine { x: Var, scale: Var, shift: Var },
    Mean(Var),
    MeanAbs(Var),
    BlurValid { x: Var, kernel: Rc<[f64]> },
    PadCircular { x: Var, pad: usize },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub(crate) fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(t) => t.add_assign(&g),
        None => *slot = Some(g),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn shape(&self, v: Var) -> [usize; 4] {
        self.nodes[v.0].value.shape()
    }

    /// A constant input; no gradient flows into it.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t, false)
    }

    pub fn leaf(&mut self, t: Tensor, requires_grad: bool) -> Var {
        self.push(t, Op::Leaf, requires_grad)
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.value(x).map(f);
        let rg = self.rg(&[x]);
        self.push(value, op, rg)
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "elementwise operands must share a shape");
        let value = self.value(a).zip_map(self.value(b), f);
        let rg = self.rg(&[a, b]);
        self.push(value, op, rg)
    }

    /// Stride-1 convolution with zero padding `k / 2`; `w` is
    /// `[cout, cin, k, k]`, `b` is `[1, cout, 1, 1]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Option<Var>) -> Var {
        let ws = self.shape(w);
        assert_eq!(ws[1], self.shape(x)[1], "conv2d input channels");
        assert!(ws[2] == ws[3] && ws[2] % 2 == 1, "conv2d needs an odd square kernel");
        let value = kernels::conv2d_forward(self.value(x), self.value(w), b.map(|b| self.value(b)));
        let mut deps = vec![x, w];
        deps.extend(b);
        let rg = self.rg(&deps);
        self.push(value, Op::Conv2d { x, w, b }, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x / y, Op::Div(a, b))
    }

    /// `scale · x + shift`.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        self.unary(x, |v| scale * v + shift, Op::Affine { x, scale })
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.affine(x, s, 0.0)
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.mul(x, x)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        self.unary(x, |v| if v >= 0.0 { v } else { slope * v }, Op::LeakyRelu { x, slope })
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0) + (-v.abs()).exp().ln_1p(), Op::Softplus(x))
    }

    pub fn cos(&mut self, x: Var) -> Var {
        self.unary(x, f64::cos, Op::Cos(x))
    }

    pub fn sin(&mut self, x: Var) -> Var {
        self.unary(x, f64::sin, Op::Sin(x))
    }

    /// Real and imaginary parts of the unitary 2D transform of each plane.
    pub fn spectrum(&mut self, x: Var) -> (Var, Var) {
        let (re, im) = fourier::spectrum(self.value(x));
        let rg = self.rg(&[x]);
        let re = self.push(re, Op::Spectrum { x, part: Part::Re }, rg);
        let im = self.push(im, Op::Spectrum { x, part: Part::Im }, rg);
        (re, im)
    }

    /// Real part of the unitary inverse transform of `re + i·im`.
    pub fn inverse_spectrum_real(&mut self, re: Var, im: Var) -> Var {
        assert_eq!(self.shape(re), self.shape(im));
        let (out, _) = fourier::inverse_spectrum(self.value(re), self.value(im));
        let rg = self.rg(&[re, im]);
        self.push(out, Op::InverseSpectrumReal { re, im }, rg)
    }

    pub fn magnitude(&mut self, re: Var, im: Var) -> Var {
        self.binary(re, im, f64::hypot, Op::Magnitude { re, im })
    }

    pub fn angle(&mut self, re: Var, im: Var) -> Var {
        self.binary(re, im, phase_of, Op::Angle { re, im })
    }

    /// Amplitude and phase of a real feature map.
    pub fn decompose(&mut self, x: Var) -> (Var, Var) {
        let (re, im) = self.spectrum(x);
        (self.magnitude(re, im), self.angle(re, im))
    }

    /// `A·cos φ` and `A·sin φ`.
    pub fn polar(&mut self, amp: Var, phase: Var) -> (Var, Var) {
        let c = self.cos(phase);
        let s = self.sin(phase);
        (self.mul(amp, c), self.mul(amp, s))
    }

    /// Real part of the inverse transform of `A·e^{iφ}`.
    pub fn recompose(&mut self, amp: Var, phase: Var) -> Var {
        let (re, im) = self.polar(amp, phase);
        self.inverse_spectrum_real(re, im)
    }

    pub fn concat_channels(&mut self, parts: &[Var]) -> Var {
        let [n, _, h, w] = self.shape(parts[0]);
        let total: usize = parts.iter().map(|&p| self.shape(p)[1]).sum();
        let mut out = Tensor::zeros([n, total, h, w]);
        let hw = h * w;
        for ni in 0..n {
            let mut offset = 0;
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.shape()[2..], [h, w], "concat spatial dims");
                let c = t.channels();
                let src = &t.data()[ni * c * hw..(ni + 1) * c * hw];
                out.data_mut()[(ni * total + offset) * hw..][..c * hw].copy_from_slice(src);
                offset += c;
            }
        }
        let rg = self.rg(parts);
        self.push(out, Op::Concat(parts.to_vec()), rg)
    }

    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Var {
        let t = self.value(x);
        let [n, c, h, w] = t.shape();
        assert!(start + len <= c);
        let hw = h * w;
        let mut data = Vec::with_capacity(n * len * hw);
        for ni in 0..n {
            data.extend_from_slice(&t.data()[(ni * c + start) * hw..(ni * c + start + len) * hw]);
        }
        let out = Tensor::from_vec([n, len, h, w], data).expect("slice shape");
        let rg = self.rg(&[x]);
        self.push(out, Op::Slice { x, start }, rg)
    }

    /// Depth-to-space with factor 2: `[n, 4c, h, w] → [n, c, 2h, 2w]`,
    /// sub-pixel `(i, j)` of output channel `k` read from input channel
    /// `4k + 2i + j`.
    pub fn pixel_shuffle(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let [n, c4, h, w] = t.shape();
        assert_eq!(c4 % 4, 0, "pixel_shuffle needs a multiple of 4 channels");
        let c = c4 / 4;
        let out = Tensor::from_fn([n, c, 2 * h, 2 * w], |[ni, k, y, xx]| {
            t.at([ni, 4 * k + 2 * (y % 2) + xx % 2, y / 2, xx / 2])
        });
        let rg = self.rg(&[x]);
        self.push(out, Op::PixelShuffle { x }, rg)
    }

    pub fn avg_pool2(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let [n, c, h, w] = t.shape();
        assert!(h % 2 == 0 && w % 2 == 0, "avg_pool2 needs even dims");
        let out = Tensor::from_fn([n, c, h / 2, w / 2], |[ni, ci, y, xx]| {
            0.25 * (t.at([ni, ci, 2 * y, 2 * xx])
                + t.at([ni, ci, 2 * y, 2 * xx + 1])
                + t.at([ni, ci, 2 * y + 1, 2 * xx])
                + t.at([ni, ci, 2 * y + 1, 2 * xx + 1]))
        });
        let rg = self.rg(&[x]);
        self.push(out, Op::AvgPool2(x), rg)
    }

    /// Nearest-neighbour 2× upsampling.
    pub fn upsample2(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let [n, c, h, w] = t.shape();
        let out = Tensor::from_fn([n, c, 2 * h, 2 * w], |[ni, ci, y, xx]| t.at([ni, ci, y / 2, xx / 2]));
        let rg = self.rg(&[x]);
        self.push(out, Op::Upsample2(x), rg)
    }

    /// Per-plane normalization to zero mean and unit (biased) variance.
    pub fn instance_norm(&mut self, x: Var, eps: f64) -> Var {
        let t = self.value(x);
        let mut out = t.clone();
        let planes = t.batch() * t.channels();
        let hw = t.plane_len() as f64;
        let mut inv_std = Vec::with_capacity(planes);
        for p in out.data_mut().chunks_exact_mut(t.plane_len()) {
            let mean = p.iter().sum::<f64>() / hw;
            let var = p.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / hw;
            let is = 1.0 / (var + eps).sqrt();
            p.iter_mut().for_each(|v| *v = (*v - mean) * is);
            inv_std.push(is);
        }
        let rg = self.rg(&[x]);
        self.push(out, Op::InstanceNorm { x, inv_std }, rg)
    }

    /// `x · scale[c] + shift[c]` with `[1, c, 1, 1]` parameters.
    pub fn channel_affine(&mut self, x: Var, scale: Var, shift: Var) -> Var {
        let t = self.value(x);
        let (s, b) = (self.value(scale), self.value(shift));
        assert_eq!(s.len(), t.channels());
        let c = t.channels();
        let mut out = t.clone();
        for (p, plane) in out.data_mut().chunks_exact_mut(t.plane_len()).enumerate() {
            let ci = p % c;
            let (sv, bv) = (s.data()[ci], b.data()[ci]);
            plane.iter_mut().for_each(|v| *v = *v * sv + bv);
        }
        let rg = self.rg(&[x, scale, shift]);
        self.push(out, Op::ChannelAffine { x, scale, shift }, rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let m = self.value(x).mean();
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(m), Op::Mean(x), rg)
    }

    /// Mean absolute value: the L1 reduction used by every loss.
    pub fn mean_abs(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let m = t.data().iter().map(|v| v.abs()).sum::<f64>() / t.len() as f64;
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(m), Op::MeanAbs(x), rg)
    }

    pub fn l1(&mut self, a: Var, b: Var) -> Var {
        let d = self.sub(a, b);
        self.mean_abs(d)
    }

    /// Periodic padding by `pad` on every side, wrapping as often as needed.
    pub fn pad_circular(&mut self, x: Var, pad: usize) -> Var {
        let t = self.value(x);
        let [n, c, h, w] = t.shape();
        let out = Tensor::from_fn([n, c, h + 2 * pad, w + 2 * pad], |[ni, ci, y, xx]| {
            t.at([ni, ci, (y + h * pad - pad) % h, (xx + w * pad - pad) % w])
        });
        let rg = self.rg(&[x]);
        self.push(out, Op::PadCircular { x, pad }, rg)
    }

    /// Separable "valid" filtering with a symmetric 1D kernel.
    pub fn blur_valid(&mut self, x: Var, kernel: Rc<[f64]>) -> Var {
        let out = kernels::blur_valid(self.value(x), &kernel);
        let rg = self.rg(&[x]);
        self.push(out, Op::BlurValid { x, kernel }, rg)
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).len(), 1, "backward needs a scalar output");
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients { grads }
    }

    fn backprop(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let rg = |v: Var| self.nodes[v.0].requires_grad;
        let mut send = |v: Var, t: Tensor| {
            if self.nodes[v.0].requires_grad {
                accumulate(&mut grads[v.0], t);
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { x, w, b } => {
                let (dx, dw, db) = kernels::conv2d_backward(
                    val(*x),
                    val(*w),
                    g,
                    rg(*x),
                    rg(*w),
                    b.is_some_and(rg),
                );
                if let Some(dx) = dx {
                    send(*x, dx);
                }
                if let Some(dw) = dw {
                    send(*w, dw);
                }
                if let (Some(b), Some(db)) = (b, db) {
                    send(*b, db);
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                if rg(*a) {
                    send(*a, g.zip_map(val(*b), |gv, bv| gv * bv));
                }
                if rg(*b) {
                    send(*b, g.zip_map(val(*a), |gv, av| gv * av));
                }
            }
            Op::Div(a, b) => {
                let bv = val(*b);
                if rg(*a) {
                    send(*a, g.zip_map(bv, |gv, d| gv / d));
                }
                if rg(*b) {
                    // d(a/b)/db = −out/b
                    let t = g.zip_map(&node.value, |gv, o| gv * o).zip_map(bv, |v, d| -v / d);
                    send(*b, t);
                }
            }
            Op::Affine { x, scale } => send(*x, g.map(|v| v * scale)),
            Op::LeakyRelu { x, slope } => {
                send(*x, g.zip_map(val(*x), |gv, xv| if xv >= 0.0 { gv } else { gv * slope }));
            }
            Op::Softplus(x) => {
                send(*x, g.zip_map(val(*x), |gv, xv| gv / (1.0 + (-xv).exp())));
            }
            Op::Cos(x) => send(*x, g.zip_map(val(*x), |gv, xv| -gv * xv.sin())),
            Op::Sin(x) => send(*x, g.zip_map(val(*x), |gv, xv| gv * xv.cos())),
            Op::Spectrum { x, part } => {
                // ∂/∂x of Re(Fx) is Re(Fᴴg), of Im(Fx) is Re(Fᴴ(i·g)).
                let zero = Tensor::zeros(g.shape());
                let (dx, _) = match part {
                    Part::Re => fourier::inverse_spectrum(g, &zero),
                    Part::Im => fourier::inverse_spectrum(&zero, g),
                };
                send(*x, dx);
            }
            Op::InverseSpectrumReal { re, im } => {
                // out = Re(Fᴴz): ∂/∂re = Re(Fg), ∂/∂im = Im(Fg).
                let (wr, wi) = fourier::spectrum(g);
                send(*re, wr);
                send(*im, wi);
            }
            Op::Magnitude { re, im } => {
                let a = &node.value;
                let (r, i) = (val(*re), val(*im));
                let safe = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
                if rg(*re) {
                    let t = Tensor::from_vec(
                        g.shape(),
                        g.data()
                            .iter()
                            .zip(r.data())
                            .zip(a.data())
                            .map(|((gv, rv), av)| gv * safe(*rv, *av))
                            .collect(),
                    )
                    .unwrap();
                    send(*re, t);
                }
                if rg(*im) {
                    let t = Tensor::from_vec(
                        g.shape(),
                        g.data()
                            .iter()
                            .zip(i.data())
                            .zip(a.data())
                            .map(|((gv, iv), av)| gv * safe(*iv, *av))
                            .collect(),
                    )
                    .unwrap();
                    send(*im, t);
                }
            }
            Op::Angle { re, im } => {
                let (r, i) = (val(*re), val(*im));
                let mut dre = Tensor::zeros(g.shape());
                let mut dim = Tensor::zeros(g.shape());
                for k in 0..g.len() {
                    let (rv, iv) = (r.data()[k], i.data()[k]);
                    let a2 = rv * rv + iv * iv;
                    if a2 > 0.0 {
                        dre.data_mut()[k] = -g.data()[k] * iv / a2;
                        dim.data_mut()[k] = g.data()[k] * rv / a2;
                    }
                }
                send(*re, dre);
                send(*im, dim);
            }
            Op::Concat(parts) => {
                let [n, total, h, w] = g.shape();
                let hw = h * w;
                let mut offset = 0;
                for &p in parts {
                    let c = self.nodes[p.0].value.channels();
                    if rg(p) {
                        let mut t = Tensor::zeros([n, c, h, w]);
                        for ni in 0..n {
                            t.data_mut()[ni * c * hw..(ni + 1) * c * hw]
                                .copy_from_slice(&g.data()[(ni * total + offset) * hw..][..c * hw]);
                        }
                        send(p, t);
                    }
                    offset += c;
                }
            }
            Op::Slice { x, start } => {
                let xs = val(*x).shape();
                let [n, len, h, w] = g.shape();
                let hw = h * w;
                let mut t = Tensor::zeros(xs);
                for ni in 0..n {
                    t.data_mut()[(ni * xs[1] + start) * hw..][..len * hw]
                        .copy_from_slice(&g.data()[ni * len * hw..(ni + 1) * len * hw]);
                }
                send(*x, t);
            }
            Op::PixelShuffle { x } => {
                let xs = val(*x).shape();
                let t = Tensor::from_fn(xs, |[ni, ci, y, xx]| {
                    let (k, sub) = (ci / 4, ci % 4);
                    g.at([ni, k, 2 * y + sub / 2, 2 * xx + sub % 2])
                });
                send(*x, t);
            }
            Op::AvgPool2(x) => {
                let xs = val(*x).shape();
                send(*x, Tensor::from_fn(xs, |[ni, ci, y, xx]| 0.25 * g.at([ni, ci, y / 2, xx / 2])));
            }
            Op::Upsample2(x) => {
                let xs = val(*x).shape();
                send(
                    *x,
                    Tensor::from_fn(xs, |[ni, ci, y, xx]| {
                        g.at([ni, ci, 2 * y, 2 * xx])
                            + g.at([ni, ci, 2 * y, 2 * xx + 1])
                            + g.at([ni, ci, 2 * y + 1, 2 * xx])
                            + g.at([ni, ci, 2 * y + 1, 2 * xx + 1])
                    }),
                );
            }
            Op::InstanceNorm { x, inv_std } => {
                let y = &node.value;
                let hw = y.plane_len();
                let mut dx = Tensor::zeros(y.shape());
                for (p, is) in inv_std.iter().enumerate() {
                    let gp = &g.data()[p * hw..(p + 1) * hw];
                    let yp = &y.data()[p * hw..(p + 1) * hw];
                    let mg = gp.iter().sum::<f64>() / hw as f64;
                    let mgy = gp.iter().zip(yp).map(|(a, b)| a * b).sum::<f64>() / hw as f64;
                    for ((d, gv), yv) in dx.data_mut()[p * hw..(p + 1) * hw].iter_mut().zip(gp).zip(yp) {
                        *d = is * (gv - mg - yv * mgy);
                    }
                }
                send(*x, dx);
            }
            Op::ChannelAffine { x, scale, shift } => {
                let xv = val(*x);
                let c = xv.channels();
                let hw = xv.plane_len();
                let s = val(*scale);
                if rg(*x) {
                    let mut dx = g.clone();
                    for (p, plane) in dx.data_mut().chunks_exact_mut(hw).enumerate() {
                        let sv = s.data()[p % c];
                        plane.iter_mut().for_each(|v| *v *= sv);
                    }
                    send(*x, dx);
                }
                let mut ds = Tensor::zeros([1, c, 1, 1]);
                let mut db = Tensor::zeros([1, c, 1, 1]);
                for p in 0..xv.batch() * c {
                    let gp = &g.data()[p * hw..(p + 1) * hw];
                    let xp = &xv.data()[p * hw..(p + 1) * hw];
                    ds.data_mut()[p % c] += gp.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>();
                    db.data_mut()[p % c] += gp.iter().sum::<f64>();
                }
                send(*scale, ds);
                send(*shift, db);
            }
            Op::Mean(x) => {
                let xs = val(*x);
                let v = g.data()[0] / xs.len() as f64;
                send(*x, Tensor::full(xs.shape(), v));
            }
            Op::MeanAbs(x) => {
                let xs = val(*x);
                let v = g.data()[0] / xs.len() as f64;
                send(*x, xs.map(|e| if e > 0.0 { v } else if e < 0.0 { -v } else { 0.0 }));
            }
            Op::PadCircular { x, pad } => {
                let [n, c, h, w] = val(*x).shape();
                let mut dx = Tensor::zeros([n, c, h, w]);
                let [_, _, ph, pw] = g.shape();
                for ni in 0..n {
                    for ci in 0..c {
                        let src = g.plane(ni, ci);
                        let dst = dx.plane_mut(ni, ci);
                        for y in 0..ph {
                            let sy = (y + h * pad - pad) % h;
                            for xx in 0..pw {
                                dst[sy * w + (xx + w * pad - pad) % w] += src[y * pw + xx];
                            }
                        }
                    }
                }
                send(*x, dx);
            }
            Op::BlurValid { x, kernel } => {
                send(*x, kernels::blur_valid_backward(g, kernel, val(*x).shape()));
            }
        }
    }
}

#[cfg(test)]
mod tests;
