//! Training objectives: phase and amplitude supervision of the branch
//! projections, and spatial plus frequency losses on the final output.
//!
//! Every term is an L1 (mean absolute) reduction over all elements, batch
//! included. Losses are recorded on an autodiff [`Graph`]; the plain
//! functions build a throwaway graph.

pub mod perceptual;

use std::rc::Rc;

use serde::{Deserialize, Serialize};

pub use perceptual::{PerceptualConfig, PerceptualExtractor};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::metrics::{gaussian_window, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
use crate::network::ModelOutputs;
use crate::imaging::rgb::RgbImage;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    /// Frequency (real/imaginary) loss weight.
    pub alpha: f64,
    /// Phase loss weight.
    pub beta: f64,
    /// Amplitude loss weight.
    pub gamma: f64,
    pub ssim_coeff: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.1,
            gamma: 0.1,
            ssim_coeff: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_pha: f64,
    pub l_amp: f64,
    pub l_spa: f64,
    pub l_fre: f64,
    pub l_vgg: f64,
    pub l_ssim: f64,
    pub l_1: f64,
    pub total: f64,
    /// The perceptual term used the fixed random extractor.
    pub perceptual_fallback: bool,
}

impl LossReport {
    /// Assembles a report; `l_spa` and `total` are derived from the terms.
    #[allow(clippy::too_many_arguments)]
    pub fn from_terms(
        w: &LossWeights,
        l_pha: f64,
        l_amp: f64,
        l_fre: f64,
        l_vgg: f64,
        l_ssim: f64,
        l_1: f64,
        perceptual_fallback: bool,
    ) -> Self {
        let l_spa = l_vgg + w.ssim_coeff * l_ssim + l_1;
        let total = l_spa + w.alpha * l_fre + w.beta * l_pha + w.gamma * l_amp;
        Self {
            l_pha,
            l_amp,
            l_spa,
            l_fre,
            l_vgg,
            l_ssim,
            l_1,
            total,
            perceptual_fallback,
        }
    }

    pub fn terms(&self) -> [(&'static str, f64); 8] {
        [
            ("l_pha", self.l_pha),
            ("l_amp", self.l_amp),
            ("l_fre", self.l_fre),
            ("l_vgg", self.l_vgg),
            ("l_ssim", self.l_ssim),
            ("l_1", self.l_1),
            ("l_spa", self.l_spa),
            ("total", self.total),
        ]
    }

    /// Tab-separated column names matching [`LossReport::tsv_row`].
    pub fn header() -> String {
        let names: Vec<&str> = Self::from_terms(&LossWeights::default(), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, false)
            .terms()
            .iter()
            .map(|(n, _)| *n)
            .collect();
        names.join("\t")
    }

    pub fn tsv_row(&self) -> String {
        let cells: Vec<String> = self.terms().iter().map(|(_, v)| format!("{v:.8e}")).collect();
        cells.join("\t")
    }

    /// Fails naming the first non-finite term.
    pub fn check_finite(&self, iteration: u64) -> Result<()> {
        match self.terms().into_iter().find(|(_, v)| !v.is_finite()) {
            Some((term, _)) => Err(Error::NonFiniteLoss { term, iteration }),
            None => Ok(()),
        }
    }
}

fn same_shape(g: &Graph, a: Var, b: Var, what: &str) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::dim(format!("{what}: shapes {:?} and {:?} differ", g.shape(a), g.shape(b))));
    }
    Ok(())
}

pub fn phase_loss_graph(g: &mut Graph, y_p: Var, gt: Var) -> Result<Var> {
    same_shape(g, y_p, gt, "phase loss")?;
    let (_, p) = g.decompose(y_p);
    let (_, q) = g.decompose(gt);
    Ok(g.l1(p, q))
}

pub fn amplitude_loss_graph(g: &mut Graph, y_a: Var, gt: Var) -> Result<Var> {
    same_shape(g, y_a, gt, "amplitude loss")?;
    let (a, _) = g.decompose(y_a);
    let (b, _) = g.decompose(gt);
    Ok(g.l1(a, b))
}

pub fn frequency_loss_graph(g: &mut Graph, y: Var, gt: Var) -> Result<Var> {
    same_shape(g, y, gt, "frequency loss")?;
    let (yr, yi) = g.spectrum(y);
    let (gr, gi) = g.spectrum(gt);
    let lr = g.l1(yr, gr);
    let li = g.l1(yi, gi);
    Ok(g.add(lr, li))
}

pub fn l1_loss_graph(g: &mut Graph, y: Var, gt: Var) -> Result<Var> {
    same_shape(g, y, gt, "L1 loss")?;
    Ok(g.l1(y, gt))
}

/// `1 − SSIM`, identical to [`crate::metrics::ssim`] (periodic 11×11
/// Gaussian windows). Unlike the metric it also accepts images smaller than
/// the window, wrapping as often as needed.
pub fn ssim_loss_graph(g: &mut Graph, y: Var, gt: Var) -> Result<Var> {
    same_shape(g, y, gt, "SSIM loss")?;
    let [_, _, h, w] = g.shape(y);
    if h == 0 || w == 0 {
        return Err(Error::dim("SSIM loss on an empty image"));
    }
    let kernel: Rc<[f64]> = gaussian_window(SSIM_WINDOW, SSIM_SIGMA).into();
    let (c1, c2) = (SSIM_K1 * SSIM_K1, SSIM_K2 * SSIM_K2);
    let blur = |g: &mut Graph, v: Var| {
        let p = g.pad_circular(v, SSIM_WINDOW / 2);
        g.blur_valid(p, kernel.clone())
    };
    let mu_x = blur(g, y);
    let mu_y = blur(g, gt);
    let xx = g.mul(y, y);
    let yy = g.mul(gt, gt);
    let xy = g.mul(y, gt);
    let (bxx, byy, bxy) = (blur(g, xx), blur(g, yy), blur(g, xy));
    let mxx = g.mul(mu_x, mu_x);
    let myy = g.mul(mu_y, mu_y);
    let mxy = g.mul(mu_x, mu_y);
    let sxx = g.sub(bxx, mxx);
    let syy = g.sub(byy, myy);
    let sxy = g.sub(bxy, mxy);
    let num1 = g.affine(mxy, 2.0, c1);
    let m2 = g.add(mxx, myy);
    let den1 = g.affine(m2, 1.0, c1);
    let num2 = g.affine(sxy, 2.0, c2);
    let s2 = g.add(sxx, syy);
    let den2 = g.affine(s2, 1.0, c2);
    let l = g.div(num1, den1);
    let cs = g.div(num2, den2);
    let map = g.mul(l, cs);
    let s = g.mean(map);
    Ok(g.affine(s, -1.0, 1.0))
}

/// Mean over tapped layers of the L1 distance between activations.
pub fn perceptual_loss_graph(g: &mut Graph, y: Var, gt: Var, extractor: &PerceptualExtractor) -> Result<Var> {
    same_shape(g, y, gt, "perceptual loss")?;
    let fy = extractor.features(g, y);
    let fg = extractor.features(g, gt);
    let n = fy.len() as f64;
    let mut acc: Option<Var> = None;
    for (a, b) in fy.into_iter().zip(fg) {
        let d = g.l1(a, b);
        acc = Some(match acc {
            Some(s) => g.add(s, d),
            None => d,
        });
    }
    let sum = acc.expect("extractor has at least one tap");
    Ok(g.scale(sum, 1.0 / n))
}

/// Graph nodes of every loss term.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub l_pha: Var,
    pub l_amp: Var,
    pub l_fre: Var,
    pub l_vgg: Var,
    pub l_ssim: Var,
    pub l_1: Var,
    pub l_spa: Var,
    pub total: Var,
}

impl LossVars {
    pub fn report(&self, g: &Graph, w: &LossWeights, perceptual_fallback: bool) -> LossReport {
        let v = |x: Var| g.value(x).data()[0];
        LossReport::from_terms(
            w,
            v(self.l_pha),
            v(self.l_amp),
            v(self.l_fre),
            v(self.l_vgg),
            v(self.l_ssim),
            v(self.l_1),
            perceptual_fallback,
        )
    }
}

/// Records the weighted objective for outputs `(y, y_p, y_a)` against `gt`.
pub fn total_loss_graph(
    g: &mut Graph,
    y: Var,
    y_p: Var,
    y_a: Var,
    gt: Var,
    w: &LossWeights,
    extractor: &PerceptualExtractor,
) -> Result<LossVars> {
    let l_pha = phase_loss_graph(g, y_p, gt)?;
    let l_amp = amplitude_loss_graph(g, y_a, gt)?;
    let l_fre = frequency_loss_graph(g, y, gt)?;
    let l_vgg = perceptual_loss_graph(g, y, gt, extractor)?;
    let l_ssim = ssim_loss_graph(g, y, gt)?;
    let l_1 = l1_loss_graph(g, y, gt)?;
    let s = g.scale(l_ssim, w.ssim_coeff);
    let spa = g.add(l_vgg, s);
    let l_spa = g.add(spa, l_1);
    let f = g.scale(l_fre, w.alpha);
    let t = g.add(l_spa, f);
    let p = g.scale(l_pha, w.beta);
    let t = g.add(t, p);
    let a = g.scale(l_amp, w.gamma);
    let total = g.add(t, a);
    Ok(LossVars {
        l_pha,
        l_amp,
        l_fre,
        l_vgg,
        l_ssim,
        l_1,
        l_spa,
        total,
    })
}

fn eval_pair(a: &Tensor, b: &Tensor, f: impl FnOnce(&mut Graph, Var, Var) -> Result<Var>) -> Result<f64> {
    let mut g = Graph::new();
    let (va, vb) = (g.constant(a.clone()), g.constant(b.clone()));
    let out = f(&mut g, va, vb)?;
    Ok(g.value(out).data()[0])
}

pub fn phase_loss(y_p: &Tensor, gt: &Tensor) -> Result<f64> {
    eval_pair(y_p, gt, phase_loss_graph)
}

pub fn amplitude_loss(y_a: &Tensor, gt: &Tensor) -> Result<f64> {
    eval_pair(y_a, gt, amplitude_loss_graph)
}

pub fn frequency_loss(y: &Tensor, gt: &Tensor) -> Result<f64> {
    eval_pair(y, gt, frequency_loss_graph)
}

pub fn l1_loss(y: &Tensor, gt: &Tensor) -> Result<f64> {
    eval_pair(y, gt, l1_loss_graph)
}

pub fn ssim_loss(y: &Tensor, gt: &Tensor) -> Result<f64> {
    eval_pair(y, gt, ssim_loss_graph)
}

pub fn perceptual_loss(y: &Tensor, gt: &Tensor, extractor: &PerceptualExtractor) -> Result<f64> {
    eval_pair(y, gt, |g, a, b| perceptual_loss_graph(g, a, b, extractor))
}

pub fn total_loss(
    outputs: &ModelOutputs,
    gt: &RgbImage,
    w: &LossWeights,
    extractor: &PerceptualExtractor,
) -> Result<LossReport> {
    let mut g = Graph::new();
    let y = g.constant(outputs.y.tensor().clone());
    let y_p = g.constant(outputs.y_p.tensor().clone());
    let y_a = g.constant(outputs.y_a.tensor().clone());
    let gt = g.constant(gt.tensor().clone());
    let vars = total_loss_graph(&mut g, y, y_p, y_a, gt, w, extractor)?;
    Ok(vars.report(&g, w, extractor.is_fallback()))
}
