//! Two-stage PPCA over the statistic groups.
//!
//! Each group `C1..C10` gets its own PPCA whose latent size is the smallest
//! one reaching a shared cumulative contribution threshold `r` on that
//! group's spectrum. The group latents are concatenated into an intermediate
//! vector and compressed by a final PPCA to the output dimension `d`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{Reader, Writer};
use crate::ppca::{choose_dim, cumulative_contribution, Decomposition, PpcaModel};
use crate::pss::{read_params, PssLayout, PssParams, PssVector, GROUP_COUNT};

const MAGIC: &[u8; 4] = b"HPCA";
/// Container format version written by this build.
pub const FORMAT_VERSION: u32 = 1;

/// Fitted hierarchical model.
#[derive(Debug, Clone, PartialEq)]
pub struct HppcaModel {
    layout: PssLayout,
    threshold: f64,
    groups: Vec<PpcaModel>,
    final_model: PpcaModel,
}

/// Fits the hierarchy to a set of statistic vectors sharing one layout.
///
/// Errors with [`Error::DimensionTooLarge`] when `d` exceeds the
/// intermediate dimension reached at threshold `r`. When `d >= n`, the final
/// stage can only resolve `n - 1` directions; the remaining output
/// coordinates are constant zero.
pub fn fit_hierarchy(data: &[PssVector], r: f64, d: usize) -> Result<HppcaModel> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    let layout = first.layout().clone();
    if let Some(i) = data.iter().position(|v| v.layout() != &layout) {
        return Err(Error::LayoutMismatch(format!(
            "vector {i} has parameters {:?}, vector 0 has {:?}",
            data[i].params(),
            layout.params()
        )));
    }
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 vectors, got {}", data.len())));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {r} outside (0, 1]")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("output dimension must be at least 1".into()));
    }

    let groups: Vec<PpcaModel> = layout
        .ranges()
        .par_iter()
        .map(|range| {
            let rows: Vec<Vec<f64>> = data.iter().map(|v| v.values()[range.clone()].to_vec()).collect();
            let dec = Decomposition::new(&rows)?;
            let q = if dec.eigenvalues()[0] > 0.0 {
                choose_dim(dec.eigenvalues(), r)?.min(dec.max_latent())
            } else {
                1
            };
            dec.model(q)
        })
        .collect::<Result<_>>()?;

    let intermediate_dim: usize = groups.iter().map(PpcaModel::latent_dim).sum();
    if d > intermediate_dim {
        return Err(Error::DimensionTooLarge {
            requested: d,
            available: intermediate_dim,
        });
    }
    let inter: Vec<Vec<f64>> = data
        .iter()
        .map(|v| encode_groups(&groups, &layout, v.values()))
        .collect::<Result<_>>()?;
    let dec = Decomposition::new(&inter)?;
    let q = d.min(dec.max_latent());
    let fitted = dec.model(q)?;
    let final_model = if q == d {
        fitted
    } else {
        let w = fitted.loadings();
        let mut padded = DMatrix::zeros(w.nrows(), d);
        padded.view_mut((0, 0), (w.nrows(), q)).copy_from(w);
        PpcaModel::from_parts(
            fitted.mean().to_vec(),
            padded,
            fitted.noise_variance(),
            fitted.eigenvalues().to_vec(),
        )?
    };
    Ok(HppcaModel {
        layout,
        threshold: r,
        groups,
        final_model,
    })
}

fn encode_groups(groups: &[PpcaModel], layout: &PssLayout, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (m, range) in groups.iter().zip(layout.ranges()) {
        out.extend(m.encode(&x[range.clone()])?);
    }
    Ok(out)
}

impl HppcaModel {
    pub fn layout(&self) -> &PssLayout {
        &self.layout
    }

    pub fn params(&self) -> PssParams {
        self.layout.params()
    }

    /// Cumulative contribution threshold used for the group stage.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn group_models(&self) -> &[PpcaModel] {
        &self.groups
    }

    pub fn final_model(&self) -> &PpcaModel {
        &self.final_model
    }

    /// Latent size of each group model.
    pub fn group_dims(&self) -> Vec<usize> {
        self.groups.iter().map(PpcaModel::latent_dim).collect()
    }

    pub fn intermediate_dim(&self) -> usize {
        self.final_model.dim()
    }

    /// Output dimension `d`.
    pub fn output_dim(&self) -> usize {
        self.final_model.latent_dim()
    }

    /// Fraction of the statistic dimension removed: `1 - d / D`.
    pub fn reduction_rate(&self) -> f64 {
        reduction_rate(self.layout.dim(), self.output_dim())
    }

    fn check_layout(&self, v: &PssVector) -> Result<()> {
        if v.layout() != &self.layout {
            return Err(Error::LayoutMismatch(format!(
                "model expects {:?}, vector has {:?}",
                self.params(),
                v.params()
            )));
        }
        Ok(())
    }

    /// Concatenated group latents.
    pub fn encode_intermediate(&self, v: &PssVector) -> Result<Vec<f64>> {
        self.check_layout(v)?;
        encode_groups(&self.groups, &self.layout, v.values())
    }

    /// The `d`-dimensional texture code.
    pub fn encode(&self, v: &PssVector) -> Result<Vec<f64>> {
        self.final_model.encode(&self.encode_intermediate(v)?)
    }

    /// Statistic vector from a concatenation of group latents.
    pub fn decode_intermediate(&self, inter: &[f64]) -> Result<PssVector> {
        if inter.len() != self.intermediate_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.intermediate_dim(),
                actual: inter.len(),
            });
        }
        let mut values = Vec::with_capacity(self.layout.dim());
        let mut start = 0;
        for m in &self.groups {
            let q = m.latent_dim();
            values.extend(m.decode(&inter[start..start + q])?);
            start += q;
        }
        PssVector::new(values, self.layout.clone())
    }

    pub fn decode(&self, code: &[f64]) -> Result<PssVector> {
        if code.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: code.len(),
            });
        }
        self.decode_intermediate(&self.final_model.decode(code)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.params();
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(FORMAT_VERSION);
        for v in [p.n_scales, p.n_orientations, p.neighborhood] {
            w.u64(v as u64);
        }
        w.f64(self.threshold);
        w.u64(self.output_dim() as u64);
        for m in &self.groups {
            m.write(&mut w);
        }
        self.final_model.write(&mut w);
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "model container");
        r.magic(MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let params = read_params(&mut r)?;
        let layout = PssLayout::new(params).map_err(|e| Error::CorruptContainer(e.to_string()))?;
        let threshold = r.f64()?;
        let d = r.count(1)?;
        let groups = (0..GROUP_COUNT)
            .map(|_| PpcaModel::read(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let final_model = PpcaModel::read(&mut r)?;
        r.finish()?;
        for (g, (m, range)) in groups.iter().zip(layout.ranges()).enumerate() {
            if m.dim() != range.len() {
                return Err(Error::CorruptContainer(format!(
                    "group C{} block has dimension {}, layout needs {}",
                    g + 1,
                    m.dim(),
                    range.len()
                )));
            }
        }
        let inter: usize = groups.iter().map(PpcaModel::latent_dim).sum();
        if final_model.dim() != inter || final_model.latent_dim() != d {
            return Err(Error::CorruptContainer(format!(
                "final block is {}x{}, expected {inter}x{d}",
                final_model.dim(),
                final_model.latent_dim()
            )));
        }
        Ok(HppcaModel {
            layout,
            threshold,
            groups,
            final_model,
        })
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

    /// Eigenvalue spectra of every stage as CSV with columns
    /// `stage,index,eigenvalue,ccr`. `index` is 1-based; `ccr` is 0 for an
    /// all-zero spectrum.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("stage,index,eigenvalue,ccr\n");
        let stages = self
            .groups
            .iter()
            .enumerate()
            .map(|(g, m)| (format!("C{}", g + 1), m))
            .chain(std::iter::once(("final".to_string(), &self.final_model)));
        for (name, m) in stages {
            let lambda = m.eigenvalues();
            let ccr = cumulative_contribution(lambda).unwrap_or_else(|_| vec![0.0; lambda.len()]);
            for (i, (l, c)) in lambda.iter().zip(&ccr).enumerate() {
                writeln!(out, "{name},{},{l},{c}", i + 1).expect("string write");
            }
        }
        out
    }
}

/// `1 - d / D`.
pub fn reduction_rate(input_dim: usize, output_dim: usize) -> f64 {
    1.0 - output_dim as f64 / input_dim as f64
}

/// Convenience wrapper around [`HppcaModel::save`].
pub fn save_model(model: &HppcaModel, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

/// Convenience wrapper around [`HppcaModel::load`].
pub fn load_model(path: impl AsRef<Path>) -> Result<HppcaModel> {
    HppcaModel::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout() -> PssLayout {
        PssLayout::new(PssParams::new(1, 1, 3)).unwrap()
    }

    /// Each group is an exact rank-`rank` affine subspace (capped by its size).
    fn low_rank_set(n: usize, rank: usize, seed: u64) -> Vec<PssVector> {
        let layout = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases: Vec<Vec<Vec<f64>>> = layout
            .ranges()
            .iter()
            .map(|r| (0..rank).map(|_| (0..r.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
            .collect();
        (0..n)
            .map(|_| {
                let mut v = Vec::with_capacity(layout.dim());
                for (basis, r) in bases.iter().zip(layout.ranges()) {
                    let coef: Vec<f64> = (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect();
                    v.extend((0..r.len()).map(|j| 3.0 + (0..rank).map(|a| coef[a] * basis[a][j]).sum::<f64>()));
                }
                PssVector::new(v, layout.clone()).unwrap()
            })
            .collect()
    }

    #[test]
    fn reduction_rate_arithmetic() {
        assert!((reduction_rate(1784, 200) - 0.887892).abs() < 1e-6);
        assert!((reduction_rate(1784, 1000) - 0.439462).abs() < 1e-6);
        assert_eq!(reduction_rate(1784, 1784), 0.0);
    }

    #[test]
    fn rank_two_groups() {
        // size-1 groups (C10) can hold rank 1 only
        let data = low_rank_set(30, 2, 1);
        let m = fit_hierarchy(&data, 0.999, 5).unwrap();
        let sizes = layout().params().group_sizes();
        let expect: Vec<usize> = sizes.iter().map(|&s| s.min(2)).collect();
        assert_eq!(m.group_dims(), expect);
        assert_eq!(m.intermediate_dim(), expect.iter().sum::<usize>());
        assert!(matches!(
            fit_hierarchy(&data, 0.999, 100),
            Err(Error::DimensionTooLarge { requested: 100, .. })
        ));
    }

    #[test]
    fn mean_maps_to_zero_code() {
        let data = low_rank_set(20, 2, 2);
        let m = fit_hierarchy(&data, 0.999, 4).unwrap();
        let n = data.len() as f64;
        let mean: Vec<f64> = (0..data[0].len())
            .map(|j| data.iter().map(|v| v.values()[j]).sum::<f64>() / n)
            .collect();
        let mv = PssVector::new(mean.clone(), layout()).unwrap();
        assert!(m.encode(&mv).unwrap().iter().all(|c| c.abs() < 1e-9));
        let back = m.decode(&[0.0; 4]).unwrap();
        for (a, b) in back.values().iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_group_gets_zero_latent() {
        let mut data = low_rank_set(10, 2, 3);
        let c10 = layout().group_range(10).unwrap().start;
        data = data
            .into_iter()
            .map(|v| {
                let mut x = v.into_values();
                x[c10] = 0.5;
                PssVector::new(x, layout()).unwrap()
            })
            .collect();
        let m = fit_hierarchy(&data, 0.999, 3).unwrap();
        assert_eq!(m.group_dims()[9], 1);
        let inter = m.encode_intermediate(&data[0]).unwrap();
        assert_eq!(*inter.last().unwrap(), 0.0);
    }

    #[test]
    fn padded_final_stage() {
        let data = low_rank_set(5, 2, 4);
        let m = fit_hierarchy(&data, 0.999, 8).unwrap();
        assert_eq!(m.output_dim(), 8);
        let code = m.encode(&data[1]).unwrap();
        assert_eq!(&code[4..], &[0.0; 4]);
    }

    #[test]
    fn container_round_trip_and_errors() {
        let data = low_rank_set(12, 2, 5);
        let m = fit_hierarchy(&data, 0.999, 3).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(HppcaModel::from_bytes(&bytes).unwrap(), m);
        let mut bad = bytes.clone();
        bad[0] ^= 0xff;
        assert!(matches!(HppcaModel::from_bytes(&bad), Err(Error::CorruptContainer(_))));
        let mut old = bytes.clone();
        old[4] = 0;
        match HppcaModel::from_bytes(&old) {
            Err(e @ Error::VersionMismatch { found: 0, expected: 1 }) => {
                let msg = e.to_string();
                assert!(msg.contains('0') && msg.contains('1'));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(HppcaModel::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn spectrum_csv_rows() {
        let data = low_rank_set(8, 2, 6);
        let m = fit_hierarchy(&data, 0.999, 2).unwrap();
        let csv = m.spectrum_csv();
        let rows = csv.lines().count() - 1;
        assert_eq!(rows, layout().dim() + m.intermediate_dim());
        assert!(csv.lines().nth(1).unwrap().starts_with("C1,1,"));
    }

    #[test]
    fn layout_mismatch() {
        let mut data = low_rank_set(4, 1, 7);
        let other = PssLayout::new(PssParams::new(1, 1, 5)).unwrap();
        data.push(PssVector::new(vec![0.0; other.dim()], other).unwrap());
        assert!(matches!(fit_hierarchy(&data, 0.9, 1), Err(Error::LayoutMismatch(_))));
    }
}
