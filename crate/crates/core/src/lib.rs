pub mod archive;
pub mod autodiff;
pub mod error;
pub mod fourier;
pub mod imaging;
pub mod metrics;
pub mod network;
pub mod objectives;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
