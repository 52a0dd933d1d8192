//! Building blocks: Fourier refine blocks (amplitude or phase variant) and
//! the colour adaptation block.

use std::f64::consts::TAU;

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};

use super::params::{Conv, Initializer, ParamId, ParamStore};

pub const LEAKY_SLOPE: f64 = 0.2;
pub const INSTANCE_NORM_EPS: f64 = 1e-5;

pub(crate) fn lrelu(g: &mut Graph, x: Var) -> Var {
    g.leaky_relu(x, LEAKY_SLOPE)
}

pub(crate) fn expect_shape(g: &Graph, x: Var, channels: usize, what: &str) -> Result<()> {
    let s = g.shape(x);
    if s[1] != channels {
        return Err(Error::dim(format!("{what}: expected {channels} channels, got {}", s[1])));
    }
    Ok(())
}

pub(crate) fn expect_same(g: &Graph, a: Var, b: Var, what: &str) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::dim(format!("{what}: shapes {:?} and {:?} differ", g.shape(a), g.shape(b))));
    }
    Ok(())
}

/// Two 1×1 convolutions with a leaky ReLU between them, applied to an
/// amplitude or phase map.
#[derive(Clone, Copy, Debug)]
pub struct FreqStack {
    pub first: Conv,
    pub second: Conv,
}

impl FreqStack {
    pub fn new(init: &mut Initializer<'_>, name: &str, channels: usize) -> Self {
        Self {
            first: init.conv(&format!("{name}.0"), channels, channels, 1),
            second: init.conv(&format!("{name}.1"), channels, channels, 1),
        }
    }

    pub fn apply(&self, g: &mut Graph, x: Var) -> Var {
        let h = self.first.apply(g, x);
        let h = lrelu(g, h);
        self.second.apply(g, h)
    }

    /// Makes the stack an exact identity on inputs greater than `-2π`
    /// (which covers all phases and amplitudes): shift up, pass the
    /// activation in its linear region, shift back.
    pub fn set_identity(&self, store: &mut ParamStore) {
        self.first.set_identity(store, TAU);
        self.second.set_identity(store, -TAU);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralComponent {
    Amplitude,
    Phase,
}

/// Intermediate nodes of a Fourier block's frequency path.
#[derive(Clone, Copy, Debug)]
pub struct FrequencyTrace {
    pub f1: Var,
    pub amplitude: Var,
    pub phase: Var,
    pub amplitude_out: Var,
    pub phase_out: Var,
    /// Spectrum `A′·e^{iφ′}` before the inverse transform.
    pub spec_re: Var,
    pub spec_im: Var,
    /// Real part of the inverse transform.
    pub f2: Var,
}

/// Residual block whose frequency path convolves only the amplitude
/// (FARB) or only the phase (FPRB) of `Conv(F_f)`.
#[derive(Clone, Copy, Debug)]
pub struct FourierBlock {
    pub component: SpectralComponent,
    pub channels: usize,
    /// When false the frequency path is the identity, so `F²_f = F¹_f`.
    pub frequency_enabled: bool,
    pub conv_f: Conv,
    pub freq: FreqStack,
    pub conv_s: Conv,
}

impl FourierBlock {
    pub fn new(
        init: &mut Initializer<'_>,
        name: &str,
        channels: usize,
        component: SpectralComponent,
        frequency_enabled: bool,
    ) -> Self {
        let conv_f = init.conv(&format!("{name}.conv_f"), channels, channels, 3);
        let freq = FreqStack::new(init, &format!("{name}.freq"), channels);
        let conv_s = init.conv(&format!("{name}.conv_s"), channels, channels, 3);
        Self {
            component,
            channels,
            frequency_enabled,
            conv_f,
            freq,
            conv_s,
        }
    }

    pub fn forward(&self, g: &mut Graph, f_f: Var, f_s: Var) -> Result<Var> {
        self.forward_traced(g, f_f, f_s).map(|(out, _)| out)
    }

    pub fn forward_traced(&self, g: &mut Graph, f_f: Var, f_s: Var) -> Result<(Var, Option<FrequencyTrace>)> {
        expect_same(g, f_f, f_s, "Fourier block inputs")?;
        expect_shape(g, f_f, self.channels, "Fourier block input")?;
        let f1 = self.conv_f.apply(g, f_f);
        let (f2, trace) = if self.frequency_enabled {
            let (amplitude, phase) = g.decompose(f1);
            let (amplitude_out, phase_out) = match self.component {
                SpectralComponent::Amplitude => (self.freq.apply(g, amplitude), phase),
                SpectralComponent::Phase => (amplitude, self.freq.apply(g, phase)),
            };
            let (spec_re, spec_im) = g.polar(amplitude_out, phase_out);
            let f2 = g.inverse_spectrum_real(spec_re, spec_im);
            let trace = FrequencyTrace {
                f1,
                amplitude,
                phase,
                amplitude_out,
                phase_out,
                spec_re,
                spec_im,
                f2,
            };
            (f2, Some(trace))
        } else {
            (f1, None)
        };
        let s = self.conv_s.apply(g, f_s);
        let s = lrelu(g, s);
        let out = g.add(f2, s);
        Ok((g.add(out, f_s), trace))
    }
}

/// Half-instance-normalization residual block.
#[derive(Clone, Copy, Debug)]
pub struct HinBlock {
    pub channels: usize,
    pub conv1: Conv,
    pub norm_scale: ParamId,
    pub norm_shift: ParamId,
    pub conv2: Conv,
}

impl HinBlock {
    pub fn new(init: &mut Initializer<'_>, name: &str, channels: usize) -> Self {
        let half = channels / 2;
        Self {
            channels,
            conv1: init.conv(&format!("{name}.conv1"), channels, channels, 3),
            norm_scale: init.constant(&format!("{name}.norm.scale"), [1, half, 1, 1], 1.0),
            norm_shift: init.constant(&format!("{name}.norm.shift"), [1, half, 1, 1], 0.0),
            conv2: init.conv(&format!("{name}.conv2"), channels, channels, 3),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let half = self.channels / 2;
        let t = self.conv1.apply(g, x);
        let a = g.slice_channels(t, 0, half);
        let a = g.instance_norm(a, INSTANCE_NORM_EPS);
        let a = g.channel_affine(a, self.norm_scale.var(), self.norm_shift.var());
        let b = g.slice_channels(t, half, self.channels - half);
        let t = g.concat_channels(&[a, b]);
        let t = lrelu(g, t);
        let t = self.conv2.apply(g, t);
        let t = lrelu(g, t);
        g.add(t, x)
    }
}

/// Intermediate nodes of the colour adaptation block's frequency branch.
#[derive(Clone, Copy, Debug)]
pub struct CabTrace {
    pub gamma: Var,
    pub beta: Var,
    pub amplitude_out: Var,
    pub phase_out: Var,
    pub freq: Var,
}

/// Colour adaptation block: SFT modulation of the stream's amplitude by
/// the amplitude feature's amplitude, phase fusion, and a HIN spatial
/// branch.
#[derive(Clone, Copy, Debug)]
pub struct ColorAdaptationBlock {
    pub channels: usize,
    /// When false only the spatial branch runs.
    pub frequency_enabled: bool,
    pub gamma: FreqStack,
    pub beta: FreqStack,
    pub phase_fuse: Conv,
    pub spatial: HinBlock,
}

impl ColorAdaptationBlock {
    pub fn new(init: &mut Initializer<'_>, name: &str, channels: usize, frequency_enabled: bool) -> Self {
        Self {
            channels,
            frequency_enabled,
            gamma: FreqStack::new(init, &format!("{name}.gamma"), channels),
            beta: FreqStack::new(init, &format!("{name}.beta"), channels),
            phase_fuse: init.conv(&format!("{name}.phase_fuse"), 2 * channels, channels, 1),
            spatial: HinBlock::new(init, &format!("{name}.spatial"), channels),
        }
    }

    pub fn forward(&self, g: &mut Graph, s_f: Var, f_a: Var) -> Result<Var> {
        self.forward_traced(g, s_f, f_a).map(|(out, _)| out)
    }

    pub fn forward_traced(&self, g: &mut Graph, s_f: Var, f_a: Var) -> Result<(Var, Option<CabTrace>)> {
        expect_same(g, s_f, f_a, "colour adaptation inputs")?;
        expect_shape(g, s_f, self.channels, "colour adaptation input")?;
        let spatial = self.spatial.forward(g, s_f);
        if !self.frequency_enabled {
            return Ok((spatial, None));
        }
        let (amp_s, phase_s) = g.decompose(s_f);
        let (amp_a, phase_a) = g.decompose(f_a);
        let gamma = self.gamma.apply(g, amp_a);
        let gamma = g.softplus(gamma);
        let beta = self.beta.apply(g, amp_a);
        let modulated = g.mul(gamma, amp_s);
        let amplitude_out = g.add(modulated, beta);
        let phases = g.concat_channels(&[phase_s, phase_a]);
        let phase_out = self.phase_fuse.apply(g, phases);
        let freq = g.recompose(amplitude_out, phase_out);
        let out = g.add(freq, spatial);
        Ok((
            out,
            Some(CabTrace {
                gamma,
                beta,
                amplitude_out,
                phase_out,
                freq,
            }),
        ))
    }

    /// Sets `γ ≡ 1`, `β ≡ 0` and the phase fusion to pass `P_s` through,
    /// making the frequency branch reproduce `s_f`.
    pub fn set_neutral_frequency_branch(&self, store: &mut ParamStore) {
        let unit = (std::f64::consts::E - 1.0).ln();
        self.gamma.first.set_zero(store, 0.0);
        self.gamma.second.set_zero(store, unit);
        self.beta.first.set_zero(store, 0.0);
        self.beta.second.set_zero(store, 0.0);
        self.phase_fuse.set_identity(store, 0.0);
    }
}
