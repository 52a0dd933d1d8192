use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widths the model is defined for.
pub const SUPPORTED_CHANNELS: [usize; 3] = [16, 24, 48];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub base_channels: usize,
    pub n_blocks_pes: usize,
    pub n_blocks_ars: usize,
    pub cas_scales: usize,
    pub enable_phase_branch: bool,
    pub enable_amplitude_branch: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            base_channels: 24,
            n_blocks_pes: 4,
            n_blocks_ars: 4,
            cas_scales: 3,
            enable_phase_branch: true,
            enable_amplitude_branch: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_CHANNELS.contains(&self.base_channels) {
            return Err(Error::Config(format!(
                "base_channels must be one of {SUPPORTED_CHANNELS:?}, got {}",
                self.base_channels
            )));
        }
        if self.n_blocks_pes == 0 || self.n_blocks_ars == 0 {
            return Err(Error::Config("block counts must be at least 1".into()));
        }
        if self.cas_scales < 2 {
            return Err(Error::Config(format!("cas_scales must be at least 2, got {}", self.cas_scales)));
        }
        Ok(())
    }

    /// Full-resolution spatial dims must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << (self.cas_scales - 1)
    }

    pub fn check_input_dims(&self, height: usize, width: usize) -> Result<()> {
        let m = self.size_multiple();
        if height == 0 || width == 0 || !height.is_multiple_of(m) || !width.is_multiple_of(m) {
            return Err(Error::dim(format!(
                "input {height}×{width} must have both dims divisible by {m} for {} CAS scales",
                self.cas_scales
            )));
        }
        Ok(())
    }
}
