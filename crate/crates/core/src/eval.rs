//! End-to-end evaluation of a fitted model: every image is encoded, decoded,
//! re-synthesized from the decoded statistic and scored with the TSS.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hppca::HppcaModel;
use crate::image::Image;
use crate::pss::PssExtractor;
use crate::synthesis::{synthesize, SynthesisConfig};
use crate::tss::grid_tss;

/// An image with its class label and identifier.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub class: String,
    pub id: String,
    pub image: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub class: String,
    pub id: String,
    /// Mean over the sample grid of the per-sample TSS.
    pub tss: f64,
    /// `||decode(encode(v)) - v|| / ||v||` for the image's statistic `v`.
    pub pss_error: f64,
    /// Statistic distance at the end of synthesis.
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn mean_tss(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.tss))
    }

    pub fn mean_pss_error(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.pss_error))
    }

    /// Mean TSS per class, in order of first appearance.
    pub fn class_means(&self) -> Vec<(String, f64)> {
        let mut classes: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !classes.contains(&r.class.as_str()) {
                classes.push(&r.class);
            }
        }
        classes
            .into_iter()
            .map(|c| {
                let m = mean(self.rows.iter().filter(|r| r.class == c).map(|r| r.tss));
                (c.to_string(), m)
            })
            .collect()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Relative statistic reconstruction error `||decode(encode(v)) - v|| / ||v||`.
pub fn pss_reconstruction_error(model: &HppcaModel, v: &crate::pss::PssVector) -> Result<f64> {
    let back = model.decode(&model.encode(v)?)?;
    let num: f64 = back.values().iter().zip(v.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = v.values().iter().map(|b| b * b).sum();
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Runs extract, encode, decode, synthesize and grid TSS for every image.
///
/// Image `i` is synthesized with seed `cfg.seed + i` at the image's own
/// size; rows come back in input order.
pub fn evaluate_model(
    model: &HppcaModel,
    images: &[LabeledImage],
    cfg: &SynthesisConfig,
    patch: usize,
) -> Result<EvalReport> {
    if images.is_empty() {
        return Err(Error::InvalidArgument("no images to evaluate".into()));
    }
    let params = model.params();
    let rows = images
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let img = &item.image;
            if !img.is_square() {
                return Err(Error::InvalidImage(format!(
                    "{}: {}x{} is not square",
                    item.id,
                    img.width(),
                    img.height()
                )));
            }
            let v = PssExtractor::new(img.width(), params)?.extract(img)?;
            let decoded = model.decode(&model.encode(&v)?)?;
            let pss_error = pss_reconstruction_error(model, &v)?;
            let run_cfg = SynthesisConfig {
                seed: cfg.seed.wrapping_add(i as u64),
                side: img.width(),
                ..cfg.clone()
            };
            let out = synthesize(&decoded, &run_cfg)?;
            Ok(EvalRow {
                class: item.class.clone(),
                id: item.id.clone(),
                tss: grid_tss(&out.image, img, patch)?,
                pss_error,
                final_distance: *out.trace.last().expect("trace has the initial entry"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { rows })
}
