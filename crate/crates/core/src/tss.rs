//! Texture similarity score: the largest cosine similarity between a sample
//! and any same-sized patch of the source, on raw pixel vectors.

use crate::error::{Error, Result};
use crate::image::Image;

/// Default sample and patch side.
pub const DEFAULT_PATCH: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TssReport {
    /// Maximum cosine similarity over all candidate patches.
    pub tss: f64,
    pub patch: usize,
    /// Number of candidate patches (stride 1).
    pub candidates: usize,
    /// Top-left corner `(x, y)` of the best patch (first in row-major order
    /// on ties).
    pub best: (usize, usize),
}

/// Scores a `patch x patch` sample against every stride-1 patch of `source`.
/// A zero-norm vector has similarity 0 with everything.
pub fn tss(sample: &Image, source: &Image, patch: usize) -> Result<TssReport> {
    if patch == 0 {
        return Err(Error::InvalidArgument("patch size must be positive".into()));
    }
    if sample.width() != patch || sample.height() != patch {
        return Err(Error::InvalidArgument(format!(
            "sample is {}x{}, expected {patch}x{patch}",
            sample.width(),
            sample.height()
        )));
    }
    if source.width() < patch || source.height() < patch {
        return Err(Error::InvalidArgument(format!(
            "source {}x{} is smaller than the {patch}x{patch} sample",
            source.width(),
            source.height()
        )));
    }
    let s = sample.data();
    let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (w, h) = (source.width(), source.height());
    let src = source.data();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for y0 in 0..=h - patch {
        for x0 in 0..=w - patch {
            let (mut dot, mut nx) = (0.0, 0.0);
            for dy in 0..patch {
                let row = &src[(y0 + dy) * w + x0..(y0 + dy) * w + x0 + patch];
                let srow = &s[dy * patch..(dy + 1) * patch];
                for (a, b) in row.iter().zip(srow) {
                    dot += a * b;
                    nx += a * a;
                }
            }
            let denom = nx.sqrt() * s_norm;
            let sim = if denom > 0.0 { dot / denom } else { 0.0 };
            if sim > best.0 {
                best = (sim, (x0, y0));
            }
        }
    }
    Ok(TssReport {
        tss: best.0,
        patch,
        candidates: (w - patch + 1) * (h - patch + 1),
        best: best.1,
    })
}

/// Top-left corners of the non-overlapping `patch x patch` samples that tile
/// the centre of a `width x height` image.
pub fn sample_grid(width: usize, height: usize, patch: usize) -> Vec<(usize, usize)> {
    if patch == 0 || width < patch || height < patch {
        return Vec::new();
    }
    let (nx, ny) = (width / patch, height / patch);
    let (ox, oy) = ((width - nx * patch) / 2, (height - ny * patch) / 2);
    (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (ox + i * patch, oy + j * patch)))
        .collect()
}

/// Mean over the centred sample grid of `synthesized` of each sample's TSS
/// against `source`.
pub fn grid_tss(synthesized: &Image, source: &Image, patch: usize) -> Result<f64> {
    let grid = sample_grid(synthesized.width(), synthesized.height(), patch);
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}x{} image holds no {patch}x{patch} sample",
            synthesized.width(),
            synthesized.height()
        )));
    }
    let mut total = 0.0;
    for &(x, y) in &grid {
        total += tss(&synthesized.crop(x, y, patch, patch)?, source, patch)?.tss;
    }
    Ok(total / grid.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_patch_scores_one() {
        let src = Image::from_fn(8, 8, |x, y| ((x * 7 + y * 3) % 5) as f64 + 1.0).unwrap();
        let sample = src.crop(2, 3, 3, 3).unwrap();
        let r = tss(&sample, &src, 3).unwrap();
        assert!((r.tss - 1.0).abs() <= 1e-12);
        assert_eq!(r.candidates, 36);
    }

    #[test]
    fn constant_images_are_parallel() {
        let src = Image::filled(6, 6, 3.0).unwrap();
        let sample = Image::filled(3, 3, 0.5).unwrap();
        assert!((tss(&sample, &src, 3).unwrap().tss - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_norm_gives_zero() {
        let src = Image::filled(5, 5, 0.0).unwrap();
        let sample = Image::filled(3, 3, 1.0).unwrap();
        assert_eq!(tss(&sample, &src, 3).unwrap().tss, 0.0);
    }

    #[test]
    fn argument_errors() {
        let src = Image::filled(4, 4, 1.0).unwrap();
        assert!(tss(&Image::filled(5, 5, 1.0).unwrap(), &src, 5).is_err());
        assert!(tss(&Image::filled(3, 2, 1.0).unwrap(), &src, 3).is_err());
        assert!(tss(&Image::filled(3, 3, 1.0).unwrap(), &src, 0).is_err());
    }

    #[test]
    fn grid_is_centred() {
        assert_eq!(sample_grid(40, 19, 19), vec![(1, 0), (20, 0)]);
        assert_eq!(sample_grid(128, 128, 19).len(), 36);
        assert_eq!(sample_grid(128, 128, 19)[0], (7, 7));
        assert!(sample_grid(10, 10, 19).is_empty());
    }
}
