//! Paired RAW/RGB dataset on disk.
//!
//! ```text
//! <root>/meta.toml                 bit_depth = 10, cfa = "RGGB"
//! <root>/{train,val,test}/raw/<name>.png   16-bit grayscale codes
//! <root>/{train,val,test}/rgb/<name>.png   8-bit RGB
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::{png_dimensions, read_raw_png, read_rgb_png, write_raw_png, write_rgb_png};
use super::raw::{CfaPattern, RawImage};
use super::rgb::RgbImage;
use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub bit_depth: u8,
    pub cfa: CfaPattern,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self {
            bit_depth: 10,
            cfa: CfaPattern::Rggb,
        }
    }
}

impl DatasetMeta {
    pub fn read(root: &Path) -> Result<Option<Self>> {
        let path = root.join(META_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: DatasetMeta =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(Some(meta))
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        let path = root.join(META_FILE);
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Looks for a metadata file in `start` and up to three ancestors.
    pub fn find_upwards(start: &Path) -> Result<Option<Self>> {
        for dir in start.ancestors().take(4) {
            if let Some(meta) = Self::read(dir)? {
                return Ok(Some(meta));
            }
        }
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePair {
    pub name: String,
    pub raw_path: PathBuf,
    pub rgb_path: PathBuf,
}

#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub split: Split,
    pub patch_size: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            split: Split::Train,
            patch_size: 448,
        }
    }
}

/// Immutable listing of aligned pairs for one split, sorted by file name.
#[derive(Clone, Debug)]
pub struct DatasetIndex {
    pub pairs: Vec<SamplePair>,
    pub patch_size: usize,
    pub split: Split,
    pub meta: DatasetMeta,
}

fn png_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    if !dir.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

pub fn load_dataset(root: &Path, config: &DatasetConfig) -> Result<DatasetIndex> {
    if config.patch_size == 0 || !config.patch_size.is_multiple_of(2) {
        return Err(Error::Config(format!("patch size must be even and positive, got {}", config.patch_size)));
    }
    let split_dir = root.join(config.split.dir_name());
    let raw_dir = split_dir.join("raw");
    let rgb_dir = split_dir.join("rgb");
    let raw_names = png_stems(&raw_dir)?;
    let rgb_names = png_stems(&rgb_dir)?;

    let orphans: Vec<String> = raw_names
        .symmetric_difference(&rgb_names)
        .map(|n| {
            if raw_names.contains(n) {
                raw_dir.join(format!("{n}.png")).display().to_string()
            } else {
                rgb_dir.join(format!("{n}.png")).display().to_string()
            }
        })
        .collect();
    if !orphans.is_empty() {
        return Err(Error::Pairing { orphans });
    }

    let meta = match DatasetMeta::read(root)? {
        Some(m) => m,
        None if raw_names.is_empty() => DatasetMeta::default(),
        None => {
            return Err(Error::Config(format!("{} is missing", root.join(META_FILE).display())));
        }
    };

    let mut pairs = Vec::with_capacity(raw_names.len());
    for name in raw_names {
        let raw_path = raw_dir.join(format!("{name}.png"));
        let rgb_path = rgb_dir.join(format!("{name}.png"));
        let rd = png_dimensions(&raw_path)?;
        let gd = png_dimensions(&rgb_path)?;
        if rd != gd {
            return Err(Error::dim(format!(
                "{name}: RAW is {}×{} but RGB is {}×{}",
                rd.0, rd.1, gd.0, gd.1
            )));
        }
        pairs.push(SamplePair {
            name,
            raw_path,
            rgb_path,
        });
    }
    Ok(DatasetIndex {
        pairs,
        patch_size: config.patch_size,
        split: config.split,
        meta,
    })
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn load_pair(&self, i: usize) -> Result<(RawImage, RgbImage)> {
        let p = &self.pairs[i];
        let raw = read_raw_png(&p.raw_path, self.meta.bit_depth, self.meta.cfa)?;
        let rgb = read_rgb_png(&p.rgb_path)?;
        Ok((raw, rgb))
    }

    pub fn load_all(&self) -> Result<Vec<(RawImage, RgbImage)>> {
        (0..self.len()).map(|i| self.load_pair(i)).collect()
    }
}

/// Co-located square crops; `top`/`left` are rounded down to even.
pub fn crop_pair(raw: &RawImage, rgb: &RgbImage, top: usize, left: usize, size: usize) -> Result<(RawImage, RgbImage)> {
    if raw.height() != rgb.height() || raw.width() != rgb.width() {
        return Err(Error::dim("RAW and RGB dims differ"));
    }
    let (top, left) = (top & !1, left & !1);
    Ok((raw.crop(top, left, size, size)?, rgb.crop(top, left, size, size)?))
}

/// Draws an even-aligned top-left corner for a `patch_size` square crop.
pub fn random_patch_origin(rng: &mut impl Rng, height: usize, width: usize, patch_size: usize) -> Result<(usize, usize)> {
    if !patch_size.is_multiple_of(2) || patch_size == 0 {
        return Err(Error::dim(format!("patch size must be even, got {patch_size}")));
    }
    if patch_size > height || patch_size > width {
        return Err(Error::dim(format!("patch {patch_size} larger than image {height}×{width}")));
    }
    let top = rng.random_range(0..=(height - patch_size) / 2) * 2;
    let left = rng.random_range(0..=(width - patch_size) / 2) * 2;
    Ok((top, left))
}

pub fn extract_patch_pair(raw: &RawImage, rgb: &RgbImage, patch_size: usize, seed: u64) -> Result<(RawImage, RgbImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (top, left) = random_patch_origin(&mut rng, raw.height(), raw.width(), patch_size)?;
    crop_pair(raw, rgb, top, left, patch_size)
}

/// Writes one pair into the documented layout, creating directories.
pub fn write_pair(root: &Path, split: Split, name: &str, raw: &RawImage, rgb: &RgbImage) -> Result<()> {
    let base = root.join(split.dir_name());
    for sub in ["raw", "rgb"] {
        let d = base.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    write_raw_png(&base.join("raw").join(format!("{name}.png")), raw)?;
    write_rgb_png(&base.join("rgb").join(format!("{name}.png")), rgb)
}

/// Creates the empty split directories of a dataset root.
pub fn create_layout(root: &Path) -> Result<()> {
    for split in Split::ALL {
        for sub in ["raw", "rgb"] {
            let d = root.join(split.dir_name()).join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
    }
    Ok(())
}
