//! The ten-group texture statistic and its flat vector form.
//!
//! Every group is computed from images at source resolution:
//!
//! * band reconstructions `R[n][k]` (one band back-projected alone),
//! * per-scale sums `S[n] = sum_k R[n][k]`, with the low-pass
//!   back-projection as level `N`,
//! * oriented low-pass images (the low-pass back-projection seen through
//!   each angular filter), which stand in for `R[N][k]`,
//! * band magnitudes `|c[n][k]|`, each band resampled to source resolution,
//! * the high-pass back-projection.
//!
//! Using source-resolution images everywhere makes all groups exactly
//! invariant under circular shifts of the input.

mod layout;
pub(crate) mod stats;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

pub use self::layout::{pss_dim, PssLayout, PssParams, GROUP_COUNT, GROUP_NAMES};
pub use self::stats::VAR_EPS;
use self::stats::Intermediates;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{Reader, Writer};
use crate::pyramid::{Pyramid, PyramidPlan};

const MAGIC: &[u8; 4] = b"PSSV";
const VERSION: u32 = 1;

/// A statistic vector tagged with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PssVector {
    values: Vec<f64>,
    layout: PssLayout,
}

impl PssVector {
    /// Wraps raw values, checking the length and finiteness.
    pub fn new(values: Vec<f64>, layout: PssLayout) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "statistic {} is {}",
                layout.column_names()[i],
                values[i]
            )));
        }
        Ok(PssVector { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &PssLayout {
        &self.layout
    }

    pub fn params(&self) -> PssParams {
        self.layout.params()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The slice of group `C{group}`, `group` in `1..=10`.
    pub fn group_view(&self, group: usize) -> Result<&[f64]> {
        Ok(&self.values[self.layout.group_range(group)?])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.params();
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        for v in [p.n_scales, p.n_orientations, p.neighborhood, self.values.len()] {
            w.u64(v as u64);
        }
        w.f64s(&self.values);
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "statistic vector");
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let params = read_params(&mut r)?;
        let layout = PssLayout::new(params).map_err(|e| Error::CorruptContainer(e.to_string()))?;
        let d = r.count(8)?;
        if d != layout.dim() {
            return Err(Error::CorruptContainer(format!(
                "header says D={d} but N={} K={} M={} gives {}",
                params.n_scales,
                params.n_orientations,
                params.neighborhood,
                layout.dim()
            )));
        }
        let values = r.f64s(d)?;
        r.finish()?;
        PssVector::new(values, layout)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }

    /// Two-line CSV: the layout's column names, then the values.
    pub fn to_csv(&self) -> String {
        let mut out = self.layout.column_names().join(",");
        out.push('\n');
        out.push_str(&csv_row(&self.values));
        out.push('\n');
        out
    }
}

pub(crate) fn read_params(r: &mut Reader<'_>) -> Result<PssParams> {
    let mut take = || -> Result<usize> {
        let v = r.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v <= 1 << 16)
            .ok_or_else(|| Error::CorruptContainer(format!("implausible parameter {v}")))
    };
    Ok(PssParams::new(take()?, take()?, take()?))
}

/// Comma-joined values using the shortest round-trip representation.
pub(crate) fn csv_row(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("string write");
    }
    s
}

/// Computes the statistic of one image.
pub fn extract_pss(img: &Image, params: PssParams) -> Result<PssVector> {
    PssExtractor::new(img.width(), params)?.extract(img)
}

/// Reusable extractor for many images of one size.
#[derive(Clone)]
pub struct PssExtractor {
    plan: Arc<PyramidPlan>,
    layout: PssLayout,
}

impl PssExtractor {
    pub fn new(side: usize, params: PssParams) -> Result<Self> {
        let layout = PssLayout::new(params)?;
        let plan = Arc::new(PyramidPlan::new(side, params.pyramid())?);
        Ok(PssExtractor { plan, layout })
    }

    pub fn side(&self) -> usize {
        self.plan.side()
    }

    pub fn layout(&self) -> &PssLayout {
        &self.layout
    }

    pub fn extract(&self, img: &Image) -> Result<PssVector> {
        let pyr = self.plan.build(img)?;
        self.from_pyramid(img, &pyr)
    }

    /// Computes the statistic from an already built decomposition of `img`.
    pub fn from_pyramid(&self, img: &Image, pyr: &Pyramid) -> Result<PssVector> {
        let inter = intermediates(img, pyr)?;
        PssVector::new(stats::evaluate(&inter, &self.layout), self.layout.clone())
    }
}

fn intermediates(img: &Image, pyr: &Pyramid) -> Result<Intermediates> {
    let p = pyr.params();
    let mut recon = Vec::with_capacity(p.n_scales * p.n_orientations);
    let mut magnitude = Vec::with_capacity(p.n_scales * p.n_orientations);
    for s in 0..p.n_scales {
        for k in 0..p.n_orientations {
            recon.push(pyr.reconstruct_band(s, k)?.into_data());
            magnitude.push(pyr.upsampled_band(s, k)?.iter().map(|c| c.norm()).collect());
        }
    }
    let lowpass_oriented = (0..p.n_orientations)
        .map(|k| pyr.reconstruct_lowpass_oriented(k).map(Image::into_data))
        .collect::<Result<_>>()?;
    Ok(Intermediates {
        side: pyr.side(),
        pixels: img.data().to_vec(),
        recon,
        lowpass_oriented,
        lowpass: pyr.reconstruct_lowpass().into_data(),
        highpass: pyr.reconstruct_highpass().into_data(),
        magnitude,
    })
}
