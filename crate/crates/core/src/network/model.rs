use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::imaging::demosaic::demosaic;
use crate::imaging::raw::{pack_bayer, RawImage};
use crate::imaging::rgb::RgbImage;
use crate::tensor::Tensor;

use super::config::ModelConfig;
use super::params::{Initializer, ParamStore};
use super::subnets::{Ars, Cas, Pes};

/// Parameter count the paper reports for its 24-channel model.
pub const REFERENCE_PARAMS_24CH: usize = 6_170_000;

#[derive(Clone, Debug)]
pub struct FourierIsp {
    config: ModelConfig,
    params: ParamStore,
    pub pes: Pes,
    pub ars: Ars,
    pub cas: Cas,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamReport {
    pub total: usize,
    pub pes: usize,
    pub ars: usize,
    pub cas: usize,
}

impl std::fmt::Display for ParamReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} parameters ({:.3}M; PES {}, ARS {}, CAS {})",
            self.total,
            self.total as f64 / 1e6,
            self.pes,
            self.ars,
            self.cas
        )
    }
}

/// Network inputs for a batch: packed mosaics `[N, 4, H/2, W/2]` and
/// demosaiced images `[N, 3, H, W]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelInputs {
    pub packed: Tensor,
    pub demosaiced: Tensor,
}

impl ModelInputs {
    pub fn from_raws(raws: &[RawImage]) -> Result<Self> {
        let first = raws.first().ok_or_else(|| Error::dim("empty batch"))?;
        let (h, w) = (first.height(), first.width());
        let mut packed = Vec::with_capacity(raws.len());
        let mut dem = Vec::with_capacity(raws.len());
        for raw in raws {
            if (raw.height(), raw.width()) != (h, w) {
                return Err(Error::dim(format!(
                    "batch mixes {h}×{w} and {}×{} RAW images",
                    raw.height(),
                    raw.width()
                )));
            }
            packed.push(pack_bayer(raw)?.data);
            dem.push(demosaic(raw)?.into_tensor());
        }
        Ok(Self {
            packed: Tensor::stack(&packed)?,
            demosaiced: Tensor::stack(&dem)?,
        })
    }

    pub fn height(&self) -> usize {
        self.demosaiced.height()
    }

    pub fn width(&self) -> usize {
        self.demosaiced.width()
    }
}

/// Graph nodes of a forward pass.
#[derive(Clone, Copy, Debug)]
pub struct GraphOutputs {
    pub y: Var,
    pub y_p: Var,
    pub y_a: Var,
    pub f_p: Var,
    pub f_a: Var,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutputs {
    pub y: RgbImage,
    pub y_p: RgbImage,
    pub y_a: RgbImage,
}

/// Builds a model with deterministic, seeded initial parameters.
pub fn build_model(config: &ModelConfig) -> Result<(FourierIsp, ParamReport)> {
    let model = FourierIsp::new(config)?;
    let report = model.param_report();
    log::info!("built model: {report}");
    Ok((model, report))
}

impl FourierIsp {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mut init = Initializer::new(&mut params, config.seed);
        let c = config.base_channels;
        let pes = Pes::new(&mut init, c, config.n_blocks_pes, config.enable_phase_branch);
        let ars = Ars::new(&mut init, c, config.n_blocks_ars, config.enable_amplitude_branch);
        let cas = Cas::new(&mut init, c, config.cas_scales, config.enable_amplitude_branch);
        Ok(Self {
            config: config.clone(),
            params,
            pes,
            ars,
            cas,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn param_report(&self) -> ParamReport {
        let mut report = ParamReport {
            total: self.params.count(),
            pes: 0,
            ars: 0,
            cas: 0,
        };
        for (name, t) in self.params.names().iter().zip(self.params.tensors()) {
            let slot = match name.split('.').next() {
                Some("pes") => &mut report.pes,
                Some("ars") => &mut report.ars,
                _ => &mut report.cas,
            };
            *slot += t.len();
        }
        report
    }

    /// Records a forward pass on `g`, which must come from
    /// [`ParamStore::bind`] on this model's parameters.
    pub fn forward_graph(&self, g: &mut Graph, packed: Var, demosaiced: Var) -> Result<GraphOutputs> {
        let [n, c, hp, wp] = g.shape(packed);
        let [nd, cd, h, w] = g.shape(demosaiced);
        if c != 4 || cd != 3 || n != nd || h != 2 * hp || w != 2 * wp {
            return Err(Error::dim(format!(
                "packed {:?} and demosaiced {:?} inputs are inconsistent",
                g.shape(packed),
                g.shape(demosaiced)
            )));
        }
        self.config.check_input_dims(h, w)?;
        let (f_p, y_p) = self.pes.forward(g, packed)?;
        let (f_a, y_a) = self.ars.forward(g, demosaiced)?;
        let y = self.cas.forward(g, f_p, f_a)?;
        Ok(GraphOutputs { y, y_p, y_a, f_p, f_a })
    }

    /// Inference on a batch; returns tensors `[N, 3, H, W]` for `Y`,
    /// `Y_P` and `Y_A`.
    pub fn forward_inputs(&self, inputs: &ModelInputs) -> Result<(Tensor, Tensor, Tensor)> {
        let mut g = self.params.bind(false);
        let packed = g.constant(inputs.packed.clone());
        let dem = g.constant(inputs.demosaiced.clone());
        let out = self.forward_graph(&mut g, packed, dem)?;
        Ok((g.value(out.y).clone(), g.value(out.y_p).clone(), g.value(out.y_a).clone()))
    }

    pub fn forward(&self, raw: &RawImage) -> Result<ModelOutputs> {
        self.config.check_input_dims(raw.height(), raw.width())?;
        let inputs = ModelInputs::from_raws(std::slice::from_ref(raw))?;
        let (y, y_p, y_a) = self.forward_inputs(&inputs)?;
        Ok(ModelOutputs {
            y: RgbImage::from_tensor(y)?,
            y_p: RgbImage::from_tensor(y_p)?,
            y_a: RgbImage::from_tensor(y_a)?,
        })
    }
}
