//! The three subnetworks: phase enhancement (PES), amplitude refinement
//! (ARS) and colour adaptation (CAS).

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};

use super::blocks::{expect_same, expect_shape, lrelu, ColorAdaptationBlock, FourierBlock, SpectralComponent};
use super::params::{Conv, Initializer};

/// 1×1 projection of a feature map to three channels, no activation.
pub fn project_rgb(g: &mut Graph, f: Var, proj: &Conv) -> Var {
    proj.apply(g, f)
}

/// Phase branch: works on the packed mosaic at half resolution with `4C`
/// features, then pixel-shuffles to `C` features at full resolution.
#[derive(Clone, Debug)]
pub struct Pes {
    pub channels: usize,
    pub head: Conv,
    pub blocks: Vec<FourierBlock>,
    pub proj: Conv,
}

impl Pes {
    pub fn new(init: &mut Initializer<'_>, channels: usize, n_blocks: usize, phase_enabled: bool) -> Self {
        let wide = 4 * channels;
        Self {
            channels,
            head: init.conv("pes.head", 4, wide, 3),
            blocks: (0..n_blocks)
                .map(|i| FourierBlock::new(init, &format!("pes.fprb{i}"), wide, SpectralComponent::Phase, phase_enabled))
                .collect(),
            proj: init.conv("pes.proj", channels, 3, 1),
        }
    }

    /// Returns `(F_P, Y_P)`.
    pub fn forward(&self, g: &mut Graph, packed: Var) -> Result<(Var, Var)> {
        expect_shape(g, packed, 4, "packed RAW")?;
        let mut x = self.head.apply(g, packed);
        for block in &self.blocks {
            x = block.forward(g, x, x)?;
        }
        let f_p = g.pixel_shuffle(x);
        let y_p = project_rgb(g, f_p, &self.proj);
        Ok((f_p, y_p))
    }
}

/// Amplitude branch on the full-resolution demosaiced image.
#[derive(Clone, Debug)]
pub struct Ars {
    pub channels: usize,
    pub head: Conv,
    pub blocks: Vec<FourierBlock>,
    pub proj: Conv,
}

impl Ars {
    pub fn new(init: &mut Initializer<'_>, channels: usize, n_blocks: usize, amplitude_enabled: bool) -> Self {
        Self {
            channels,
            head: init.conv("ars.head", 3, channels, 3),
            blocks: (0..n_blocks)
                .map(|i| {
                    FourierBlock::new(init, &format!("ars.farb{i}"), channels, SpectralComponent::Amplitude, amplitude_enabled)
                })
                .collect(),
            proj: init.conv("ars.proj", channels, 3, 1),
        }
    }

    /// Returns `(F_A, Y_A)`.
    pub fn forward(&self, g: &mut Graph, demosaiced: Var) -> Result<(Var, Var)> {
        expect_shape(g, demosaiced, 3, "demosaiced RGB")?;
        let mut x = self.head.apply(g, demosaiced);
        for block in &self.blocks {
            x = block.forward(g, x, x)?;
        }
        let y_a = project_rgb(g, x, &self.proj);
        Ok((x, y_a))
    }
}

#[derive(Clone, Debug)]
pub struct CasLevel {
    pub cab: ColorAdaptationBlock,
    /// Encoder downsampling of the stream and of the amplitude feature;
    /// absent at the coarsest level.
    pub down_stream: Option<Conv>,
    pub down_amplitude: Option<Conv>,
    /// Decoder: channel reduction after upsampling, then merge with skip.
    pub up: Option<Conv>,
    pub merge: Option<Conv>,
}

/// U-Net that injects the amplitude feature through a colour adaptation
/// block at every encoder level.
#[derive(Clone, Debug)]
pub struct Cas {
    pub channels: usize,
    pub amplitude_enabled: bool,
    /// Without amplitude injection, `F_P` and `F_A` are concatenated and
    /// fused by this 1×1 convolution instead.
    pub input_fuse: Option<Conv>,
    pub levels: Vec<CasLevel>,
    pub proj: Conv,
}

impl Cas {
    pub fn new(init: &mut Initializer<'_>, channels: usize, scales: usize, amplitude_enabled: bool) -> Self {
        let input_fuse = (!amplitude_enabled).then(|| init.conv("cas.input_fuse", 2 * channels, channels, 1));
        let levels = (0..scales)
            .map(|l| {
                let w = channels << l;
                let last = l + 1 == scales;
                let cab = ColorAdaptationBlock::new(init, &format!("cas.l{l}.cab"), w, amplitude_enabled);
                let down_stream = (!last).then(|| init.conv(&format!("cas.l{l}.down_s"), w, 2 * w, 3));
                let down_amplitude =
                    (!last && amplitude_enabled).then(|| init.conv(&format!("cas.l{l}.down_a"), w, 2 * w, 1));
                let up = (!last).then(|| init.conv(&format!("cas.l{l}.up"), 2 * w, w, 1));
                let merge = (!last).then(|| init.conv(&format!("cas.l{l}.merge"), 2 * w, w, 3));
                CasLevel {
                    cab,
                    down_stream,
                    down_amplitude,
                    up,
                    merge,
                }
            })
            .collect();
        Self {
            channels,
            amplitude_enabled,
            input_fuse,
            levels,
            proj: init.conv("cas.proj", channels, 3, 1),
        }
    }

    pub fn size_multiple(&self) -> usize {
        1 << (self.levels.len() - 1)
    }

    pub fn forward(&self, g: &mut Graph, f_p: Var, f_a: Var) -> Result<Var> {
        expect_same(g, f_p, f_a, "CAS inputs")?;
        expect_shape(g, f_p, self.channels, "CAS input")?;
        let [_, _, h, w] = g.shape(f_p);
        let m = self.size_multiple();
        if h % m != 0 || w % m != 0 {
            return Err(Error::dim(format!(
                "CAS input {h}×{w} must be divisible by {m} for {} scales",
                self.levels.len()
            )));
        }
        let mut s = match &self.input_fuse {
            Some(fuse) => {
                let cat = g.concat_channels(&[f_p, f_a]);
                fuse.apply(g, cat)
            }
            None => f_p,
        };
        let mut a = f_a;
        let mut skips = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            s = level.cab.forward(g, s, a)?;
            if let Some(down) = &level.down_stream {
                skips.push(s);
                let pooled = g.avg_pool2(s);
                if let Some(down_a) = &level.down_amplitude {
                    a = down_a.apply(g, pooled);
                }
                let next = down.apply(g, pooled);
                s = lrelu(g, next);
                if !self.amplitude_enabled {
                    a = s;
                }
            }
        }
        for (level, skip) in self.levels.iter().zip(skips).rev() {
            let (Some(up), Some(merge)) = (&level.up, &level.merge) else {
                unreachable!("non-final levels carry decoder convs")
            };
            let u = g.upsample2(s);
            let u = up.apply(g, u);
            let cat = g.concat_channels(&[u, skip]);
            let m = merge.apply(g, cat);
            s = lrelu(g, m);
        }
        Ok(project_rgb(g, s, &self.proj))
    }
}
