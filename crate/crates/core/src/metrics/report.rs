use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ms_ssim, ms_ssim_min_size, psnr, ssim, Scorer, MS_SSIM_WEIGHTS};
use crate::error::{Error, Result};
use crate::imaging::rgb::RgbImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Clamp and round predictions to 8-bit levels before scoring.
    pub quantize_8bit: bool,
    pub ms_ssim_levels: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            quantize_8bit: true,
            ms_ssim_levels: MS_SSIM_WEIGHTS.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    /// Absent when the image is smaller than the multi-scale minimum.
    pub ms_ssim: Option<f64>,
    pub lpips: Option<f64>,
}

impl MetricReport {
    pub fn compute(
        pred: &RgbImage,
        gt: &RgbImage,
        options: &EvalOptions,
        scorer: Option<&mut Scorer<'_>>,
    ) -> Result<Self> {
        let pred = if options.quantize_8bit { pred.quantized_8bit() } else { pred.clone() };
        let (a, b) = (pred.tensor(), gt.tensor());
        let min = ms_ssim_min_size(options.ms_ssim_levels);
        let ms = if a.height() >= min && a.width() >= min {
            Some(ms_ssim(a, b, options.ms_ssim_levels)?)
        } else {
            None
        };
        Ok(Self {
            psnr_db: psnr(a, b, 1.0)?,
            ssim: ssim(a, b)?,
            ms_ssim: ms,
            lpips: super::lpips_hook(&pred, gt, scorer),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRow {
    pub name: String,
    pub metrics: MetricReport,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    /// Images that could not be scored, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn mean_of(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>, n: usize) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.map(|v| mean_of(v.into_iter(), n))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

impl EvaluationReport {
    /// Arithmetic mean of the rows in order; `None` when nothing was scored.
    pub fn mean(&self) -> Option<MetricReport> {
        let n = self.rows.len();
        if n == 0 {
            return None;
        }
        let m = |f: fn(&MetricReport) -> f64| mean_of(self.rows.iter().map(|r| f(&r.metrics)), n);
        Some(MetricReport {
            psnr_db: m(|r| r.psnr_db),
            ssim: m(|r| r.ssim),
            ms_ssim: mean_opt(self.rows.iter().map(|r| r.metrics.ms_ssim), n),
            lpips: mean_opt(self.rows.iter().map(|r| r.metrics.lpips), n),
        })
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>10} {:>9} {:>9} {:>9}", "image", "PSNR(dB)", "SSIM", "MS-SSIM", "LPIPS");
        let mut line = |name: &str, m: &MetricReport| {
            let _ = writeln!(
                s,
                "{:<24} {:>10.4} {:>9.6} {:>9} {:>9}",
                name,
                m.psnr_db,
                m.ssim,
                fmt_opt(m.ms_ssim),
                fmt_opt(m.lpips)
            );
        };
        for row in &self.rows {
            line(&row.name, &row.metrics);
        }
        if let Some(mean) = self.mean() {
            line("mean", &mean);
        }
        for (name, why) in &self.skipped {
            let _ = writeln!(s, "skipped {name}: {why}");
        }
        s
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut put = |prefix: &str, m: &MetricReport| {
            let _ = writeln!(s, "{prefix}.psnr_db={}", m.psnr_db);
            let _ = writeln!(s, "{prefix}.ssim={}", m.ssim);
            if let Some(v) = m.ms_ssim {
                let _ = writeln!(s, "{prefix}.ms_ssim={v}");
            }
            if let Some(v) = m.lpips {
                let _ = writeln!(s, "{prefix}.lpips={v}");
            }
        };
        for row in &self.rows {
            put(&format!("image.{}", row.name), &row.metrics);
        }
        if let Some(mean) = self.mean() {
            put("mean", &mean);
        }
        let _ = writeln!(s, "count={}", self.rows.len());
        let _ = writeln!(s, "skipped={}", self.skipped.len());
        s
    }

    /// Writes `<stem>.txt` (table) and `<stem>.kv` (key=value) into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("txt", self.to_table()), ("kv", self.to_key_values())] {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Scores `(name, prediction, reference)` items in order. Items whose
/// production failed or whose shapes disagree are skipped and listed.
pub fn evaluate_pairs<I>(
    items: I,
    options: &EvalOptions,
    mut scorer: Option<&mut Scorer<'_>>,
) -> EvaluationReport
where
    I: IntoIterator<Item = (String, Result<(RgbImage, RgbImage)>)>,
{
    let mut report = EvaluationReport::default();
    for (name, item) in items {
        let scored = match item {
            Ok((pred, gt)) => MetricReport::compute(&pred, &gt, options, scorer.as_deref_mut()),
            Err(e) => Err(e),
        };
        match scored {
            Ok(metrics) => report.rows.push(EvaluationRow { name, metrics }),
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                report.skipped.push((name, e.to_string()));
            }
        }
    }
    report
}
