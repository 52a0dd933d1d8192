//! RAW and RGB image types, Bayer packing, demosaicing, synthesis and
//! on-disk datasets.

pub mod dataset;
pub mod demosaic;
pub mod io;
pub mod raw;
pub mod rgb;
pub mod synth;

pub use dataset::{create_layout, load_dataset, write_pair, DatasetConfig, DatasetIndex, DatasetMeta, SamplePair, Split};
pub use demosaic::demosaic;
pub use raw::{max_code, pack_bayer, unpack_bayer, CfaPattern, PackedRaw, RawImage, Site};
pub use rgb::RgbImage;
pub use synth::{procedural_rgb, synthesize_raw, DegradationParams};
