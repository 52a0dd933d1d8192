//! The RAW-to-sRGB network as a differentiable graph.
//!
//! ```text
//! RAW ─ pack ─────► PES (FPRB × n, pixel shuffle) ─► F_P ─┐       Y_P = Proj(F_P)
//!     └ demosaic ─► ARS (FARB × n) ─────────────────► F_A ─┴► CAS ─► Y
//!                                                                  Y_A = Proj(F_A)
//! ```

pub mod blocks;
pub mod config;
pub mod model;
pub mod params;
pub mod subnets;

pub use blocks::{ColorAdaptationBlock, FourierBlock, FreqStack, HinBlock, SpectralComponent};
pub use config::ModelConfig;
pub use model::{build_model, FourierIsp, GraphOutputs, ModelInputs, ModelOutputs, ParamReport, REFERENCE_PARAMS_24CH};
pub use params::{Conv, Initializer, ParamId, ParamStore};
pub use subnets::{project_rgb, Ars, Cas, Pes};
