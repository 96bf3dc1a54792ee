//! Frequency-domain complex steerable pyramid.
//!
//! Analysis splits the spectrum with `H0`/`L0`, then at every scale applies
//! the `K` oriented band-passes and the radial low-pass, halving the grid by
//! cropping the central half-band of the spectrum. Synthesis runs the same
//! filters in reverse with zero-padding, so `collapse(build(I)) == I` up to
//! rounding. All filtering is circular.
//!
//! Scales and orientations are 0-based in this API: scale 0 is the finest
//! band grid (the source resolution).

mod filters;
pub(crate) mod transfer;

use std::sync::Arc;

pub use rustfft::num_complex::Complex64;

pub use self::filters::{
    angular, angular_normalization, initial_highpass, initial_lowpass, radial_highpass,
    radial_lowpass, FilterBank,
};
use crate::error::{Error, Result};
use crate::fft::{crop_half, neg_flat, pad_double, polar_grid, Fft2};
use crate::image::Image;

/// Smallest allowed side of the coarsest band grid.
pub const MIN_COARSE_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PyramidParams {
    pub n_scales: usize,
    pub n_orientations: usize,
}

impl PyramidParams {
    pub fn new(n_scales: usize, n_orientations: usize) -> Self {
        PyramidParams {
            n_scales,
            n_orientations,
        }
    }

    /// Checks the parameters against a square image side.
    ///
    /// The side must be a power of two and the coarsest band grid
    /// (`side / 2^(N-1)`) at least [`MIN_COARSE_SIDE`] pixels.
    pub fn validate(&self, side: usize) -> Result<()> {
        if self.n_scales == 0 || self.n_orientations == 0 {
            return Err(Error::InvalidArgument(format!(
                "need at least one scale and one orientation, got N={} K={}",
                self.n_scales, self.n_orientations
            )));
        }
        if !side.is_power_of_two() {
            return Err(Error::InvalidImage(format!(
                "pyramid input side {side} is not a power of two"
            )));
        }
        if self.n_scales >= usize::BITS as usize - 4
            || side < MIN_COARSE_SIDE << (self.n_scales - 1)
        {
            return Err(Error::InvalidArgument(format!(
                "too many scales: N={} needs a side of at least {}, got {side}",
                self.n_scales,
                MIN_COARSE_SIDE.checked_shl(self.n_scales as u32 - 1).unwrap_or(usize::MAX)
            )));
        }
        Ok(())
    }
}

/// Precomputed FFT plans and sampled filters for one `(side, params)` pair.
pub struct PyramidPlan {
    params: PyramidParams,
    side: usize,
    bank: FilterBank,
    levels: Vec<LevelPlan>,
    residual_fft: Fft2,
    /// `sum over +-theta of G_k^2` on the residual grid, DC removed.
    residual_orient: Vec<Vec<f64>>,
    initial_lowpass: Vec<f64>,
    initial_highpass: Vec<f64>,
}

struct LevelPlan {
    fft: Fft2,
    band: Vec<Vec<f64>>,
    half_lowpass: Vec<f64>,
}

impl PyramidPlan {
    pub fn new(side: usize, params: PyramidParams) -> Result<Self> {
        params.validate(side)?;
        let bank = FilterBank::new(params.n_orientations);
        let levels = (0..params.n_scales)
            .map(|level| {
                let m = side >> level;
                let grid = polar_grid(m);
                LevelPlan {
                    fft: Fft2::new(m),
                    band: (0..params.n_orientations)
                        .map(|k| grid.iter().map(|&(r, t)| bank.bandpass(k, r, t)).collect())
                        .collect(),
                    half_lowpass: grid.iter().map(|&(r, _)| bank.lowpass(r) / 2.0).collect(),
                }
            })
            .collect();
        let rs = side >> params.n_scales;
        let rgrid = polar_grid(rs);
        let residual_orient = (0..params.n_orientations)
            .map(|k| {
                (0..rs * rs)
                    .map(|i| {
                        if i == 0 {
                            return 0.0;
                        }
                        let a = bank.angular(k, rgrid[i].1);
                        let b = bank.angular(k, rgrid[neg_flat(i, rs)].1);
                        a * a + b * b
                    })
                    .collect()
            })
            .collect();
        let top = polar_grid(side);
        Ok(PyramidPlan {
            params,
            side,
            bank,
            levels,
            residual_fft: Fft2::new(rs),
            residual_orient,
            initial_lowpass: top.iter().map(|&(r, _)| bank.initial_lowpass(r)).collect(),
            initial_highpass: top.iter().map(|&(r, _)| bank.initial_highpass(r)).collect(),
        })
    }

    pub fn params(&self) -> PyramidParams {
        self.params
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn filter_bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Side of the band grid at `scale`.
    pub fn band_side(&self, scale: usize) -> usize {
        self.side >> scale
    }

    pub fn residual_side(&self) -> usize {
        self.side >> self.params.n_scales
    }

    /// Decomposes a square image.
    pub fn build(self: &Arc<Self>, img: &Image) -> Result<Pyramid> {
        if !img.is_square() || img.width() != self.side {
            return Err(Error::InvalidImage(format!(
                "pyramid planned for {s}x{s}, got {}x{}",
                img.width(),
                img.height(),
                s = self.side
            )));
        }
        let top = &self.levels[0].fft;
        let spectrum = top.forward_real(img.data());
        let highpass = top.inverse_real(mul(&spectrum, &self.initial_highpass));
        let mut current = mul(&spectrum, &self.initial_lowpass);
        let mut bands = Vec::with_capacity(self.params.n_scales);
        for (level, plan) in self.levels.iter().enumerate() {
            let m = self.side >> level;
            let scale_bands = plan
                .band
                .iter()
                .map(|filter| {
                    let mut b = mul(&current, filter);
                    plan.fft.inverse(&mut b);
                    b
                })
                .collect();
            bands.push(scale_bands);
            let mut child = crop_half(&mul(&current, &plan.half_lowpass), m);
            child.iter_mut().for_each(|v| *v *= 0.25);
            current = child;
        }
        let lowpass = self.residual_fft.inverse_real(current);
        Ok(Pyramid {
            plan: Arc::clone(self),
            bands,
            lowpass,
            highpass,
        })
    }

    /// Carries a spectrum defined at `level` back up to the source grid
    /// (through the low-pass synthesis path and `L0`) and returns the real
    /// image. `level == n_scales` means the residual grid.
    fn synthesize_up(&self, level: usize, mut spec: Vec<Complex64>) -> Vec<f64> {
        for l in (0..level).rev() {
            let m = self.side >> l;
            let plan = &self.levels[l];
            let mut up = pad_double(&spec, m / 2);
            for (v, &g) in up.iter_mut().zip(&plan.half_lowpass) {
                *v *= 4.0 * g;
            }
            spec = up;
        }
        let top = mul(&spec, &self.initial_lowpass);
        self.levels[0].fft.inverse_real(top)
    }

    /// Spectrum contribution of a set of complex bands at one level:
    /// `sum_k B_k F(band_k)` folded to its Hermitian part (twice the real part
    /// in the spatial domain).
    fn band_synthesis(&self, level: usize, bands: &[(usize, &[Complex64])]) -> Vec<Complex64> {
        let plan = &self.levels[level];
        let m = self.side >> level;
        let mut acc = vec![Complex64::default(); m * m];
        for &(k, band) in bands {
            let mut spec = band.to_vec();
            plan.fft.forward(&mut spec);
            for ((a, s), &g) in acc.iter_mut().zip(&spec).zip(&plan.band[k]) {
                *a += s * g;
            }
        }
        hermitian_fold(&acc, m)
    }
}

fn mul(spec: &[Complex64], gain: &[f64]) -> Vec<Complex64> {
    spec.iter().zip(gain).map(|(s, &g)| s * g).collect()
}

/// `S(w) + conj(S(-w))`: the spectrum of `2 Re(ifft(S))`.
fn hermitian_fold(spec: &[Complex64], m: usize) -> Vec<Complex64> {
    (0..spec.len())
        .map(|i| spec[i] + spec[neg_flat(i, m)].conj())
        .collect()
}

/// A complete steerable decomposition of one image.
#[derive(Clone)]
pub struct Pyramid {
    plan: Arc<PyramidPlan>,
    bands: Vec<Vec<Vec<Complex64>>>,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl std::fmt::Debug for Pyramid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pyramid")
            .field("side", &self.plan.side)
            .field("params", &self.plan.params)
            .finish_non_exhaustive()
    }
}

impl Pyramid {
    /// Builds a one-off decomposition. Use [`PyramidPlan`] when decomposing
    /// many images of the same size.
    pub fn build(img: &Image, params: PyramidParams) -> Result<Pyramid> {
        if !img.is_square() {
            return Err(Error::InvalidImage(format!(
                "pyramid input must be square, got {}x{}",
                img.width(),
                img.height()
            )));
        }
        Arc::new(PyramidPlan::new(img.width(), params)?).build(img)
    }

    /// Reassembles a pyramid from raw grids, checking every size against the
    /// halving schedule.
    pub fn from_parts(
        plan: Arc<PyramidPlan>,
        bands: Vec<Vec<Vec<Complex64>>>,
        lowpass: Vec<f64>,
        highpass: Vec<f64>,
    ) -> Result<Pyramid> {
        let p = plan.params;
        let bad = |what: String| Err(Error::InvalidArgument(format!("inconsistent pyramid: {what}")));
        if bands.len() != p.n_scales {
            return bad(format!("{} scales, expected {}", bands.len(), p.n_scales));
        }
        for (level, scale) in bands.iter().enumerate() {
            if scale.len() != p.n_orientations {
                return bad(format!("scale {level} has {} orientations", scale.len()));
            }
            let m = plan.side >> level;
            if let Some(b) = scale.iter().find(|b| b.len() != m * m) {
                return bad(format!("scale {level} band has {} samples, expected {}", b.len(), m * m));
            }
        }
        let rs = plan.residual_side();
        if lowpass.len() != rs * rs {
            return bad(format!("low-pass residual has {} samples", lowpass.len()));
        }
        if highpass.len() != plan.side * plan.side {
            return bad(format!("high-pass residual has {} samples", highpass.len()));
        }
        Ok(Pyramid {
            plan,
            bands,
            lowpass,
            highpass,
        })
    }

    pub fn into_parts(self) -> (Arc<PyramidPlan>, Vec<Vec<Vec<Complex64>>>, Vec<f64>, Vec<f64>) {
        (self.plan, self.bands, self.lowpass, self.highpass)
    }

    pub fn plan(&self) -> &Arc<PyramidPlan> {
        &self.plan
    }

    pub fn params(&self) -> PyramidParams {
        self.plan.params
    }

    pub fn side(&self) -> usize {
        self.plan.side
    }

    /// Complex coefficients of one band on its `side / 2^scale` grid.
    pub fn band(&self, scale: usize, orientation: usize) -> Result<&[Complex64]> {
        self.check_band(scale, orientation)?;
        Ok(&self.bands[scale][orientation])
    }

    pub fn band_side(&self, scale: usize) -> usize {
        self.plan.band_side(scale)
    }

    /// Low-pass residual on the `side / 2^N` grid.
    pub fn lowpass_residual(&self) -> &[f64] {
        &self.lowpass
    }

    /// High-pass residual at source resolution.
    pub fn highpass_residual(&self) -> &[f64] {
        &self.highpass
    }

    fn check_band(&self, scale: usize, orientation: usize) -> Result<()> {
        let p = self.plan.params;
        if scale >= p.n_scales || orientation >= p.n_orientations {
            return Err(Error::IndexOutOfRange(format!(
                "band ({scale}, {orientation}) outside {}x{} pyramid",
                p.n_scales, p.n_orientations
            )));
        }
        Ok(())
    }

    /// Exact synthesis of the full decomposition.
    pub fn collapse(&self) -> Image {
        let plan = &*self.plan;
        let mut spec = {
            let mut s: Vec<Complex64> =
                self.lowpass.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            plan.residual_fft.forward(&mut s);
            s
        };
        for level in (0..plan.params.n_scales).rev() {
            let m = plan.side >> level;
            let lp = &plan.levels[level].half_lowpass;
            let mut up = pad_double(&spec, m / 2);
            for (v, &g) in up.iter_mut().zip(lp) {
                *v *= 4.0 * g;
            }
            let bands: Vec<(usize, &[Complex64])> = self.bands[level]
                .iter()
                .enumerate()
                .map(|(k, b)| (k, b.as_slice()))
                .collect();
            let folded = plan.band_synthesis(level, &bands);
            for (u, f) in up.iter_mut().zip(folded) {
                *u += f;
            }
            spec = up;
        }
        let top = &plan.levels[0].fft;
        let hp = top.forward_real(&self.highpass);
        let full: Vec<Complex64> = spec
            .iter()
            .zip(&plan.initial_lowpass)
            .zip(hp.iter().zip(&plan.initial_highpass))
            .map(|((s, &l0), (h, &h0))| s * l0 + h * h0)
            .collect();
        Image::new(plan.side, plan.side, top.inverse_real(full)).expect("planned size")
    }

    /// Back-projection of a single band to source resolution with every other
    /// component zeroed (real part of the synthesis, including the factor 2
    /// that pairs each analytic band with its mirror).
    pub fn reconstruct_band(&self, scale: usize, orientation: usize) -> Result<Image> {
        self.check_band(scale, orientation)?;
        let spec = self
            .plan
            .band_synthesis(scale, &[(orientation, &self.bands[scale][orientation])]);
        Ok(self.to_image(self.plan.synthesize_up(scale, spec)))
    }

    /// Sum of the back-projections of all orientations at one scale.
    pub fn reconstruct_scale(&self, scale: usize) -> Result<Image> {
        self.check_band(scale, 0)?;
        let bands: Vec<(usize, &[Complex64])> = self.bands[scale]
            .iter()
            .enumerate()
            .map(|(k, b)| (k, b.as_slice()))
            .collect();
        let spec = self.plan.band_synthesis(scale, &bands);
        Ok(self.to_image(self.plan.synthesize_up(scale, spec)))
    }

    /// Back-projection of the low-pass residual.
    pub fn reconstruct_lowpass(&self) -> Image {
        let plan = &*self.plan;
        let mut s: Vec<Complex64> = self.lowpass.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.residual_fft.forward(&mut s);
        self.to_image(plan.synthesize_up(plan.params.n_scales, s))
    }

    /// Back-projection of the low-pass residual seen through the angular
    /// filter `G_k` (applied on analysis and synthesis). The DC sample stays
    /// on the non-oriented path, so these images have zero mean and sum to
    /// the mean-removed low-pass reconstruction.
    pub fn reconstruct_lowpass_oriented(&self, orientation: usize) -> Result<Image> {
        let plan = &*self.plan;
        if orientation >= plan.params.n_orientations {
            return Err(Error::IndexOutOfRange(format!(
                "orientation {orientation} outside {}",
                plan.params.n_orientations
            )));
        }
        let mut s: Vec<Complex64> = self.lowpass.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.residual_fft.forward(&mut s);
        for (v, &g) in s.iter_mut().zip(&plan.residual_orient[orientation]) {
            *v *= g;
        }
        Ok(self.to_image(plan.synthesize_up(plan.params.n_scales, s)))
    }

    /// Back-projection of the high-pass residual.
    pub fn reconstruct_highpass(&self) -> Image {
        let plan = &*self.plan;
        let top = &plan.levels[0].fft;
        let spec = mul(&top.forward_real(&self.highpass), &plan.initial_highpass);
        self.to_image(top.inverse_real(spec))
    }

    /// A band resampled to source resolution by zero-padding its spectrum.
    /// The band spectra vanish outside the kept half-band, so this is exact
    /// band-limited interpolation.
    pub fn upsampled_band(&self, scale: usize, orientation: usize) -> Result<Vec<Complex64>> {
        self.check_band(scale, orientation)?;
        let plan = &*self.plan;
        let mut spec = self.bands[scale][orientation].clone();
        plan.levels[scale].fft.forward(&mut spec);
        for l in (0..scale).rev() {
            let m = plan.side >> l;
            spec = pad_double(&spec, m / 2);
        }
        let gain = (1usize << (2 * scale)) as f64;
        spec.iter_mut().for_each(|v| *v *= gain);
        plan.levels[0].fft.inverse(&mut spec);
        Ok(spec)
    }

    /// `alpha * self + beta * other`, band by band.
    pub fn axpby(&self, alpha: f64, beta: f64, other: &Pyramid) -> Result<Pyramid> {
        if self.plan.side != other.plan.side || self.plan.params != other.plan.params {
            return Err(Error::InvalidArgument(
                "pyramids have different geometry".to_string(),
            ));
        }
        let comb = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
        };
        let bands = self
            .bands
            .iter()
            .zip(&other.bands)
            .map(|(sa, sb)| {
                sa.iter()
                    .zip(sb)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * alpha + y * beta).collect())
                    .collect()
            })
            .collect();
        Ok(Pyramid {
            plan: Arc::clone(&self.plan),
            bands,
            lowpass: comb(&self.lowpass, &other.lowpass),
            highpass: comb(&self.highpass, &other.highpass),
        })
    }

    /// Band magnitudes scaled to `[0, 255]`, for inspection.
    pub fn band_magnitude_image(&self, scale: usize, orientation: usize) -> Result<Image> {
        let band = self.band(scale, orientation)?;
        let m = self.band_side(scale);
        let mags: Vec<f64> = band.iter().map(|c| c.norm()).collect();
        let peak = mags.iter().cloned().fold(0.0, f64::max);
        let gain = if peak > 0.0 { 255.0 / peak } else { 0.0 };
        Image::new(m, m, mags.into_iter().map(|v| v * gain).collect())
    }

    fn to_image(&self, data: Vec<f64>) -> Image {
        Image::new(self.plan.side, self.plan.side, data).expect("planned size")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(side: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(side, side, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn validation() {
        let p = PyramidParams::new(3, 4);
        assert!(p.validate(64).is_ok());
        assert!(p.validate(32).is_ok());
        assert!(p.validate(16).is_err());
        assert!(p.validate(48).is_err());
        assert!(PyramidParams::new(0, 4).validate(64).is_err());
        assert!(PyramidParams::new(2, 2).validate(16).is_ok());
        let img = Image::filled(16, 8, 1.0).unwrap();
        assert!(Pyramid::build(&img, p).is_err());
    }

    #[test]
    fn halving_schedule() {
        let pyr = Pyramid::build(&noise(64, 1), PyramidParams::new(3, 4)).unwrap();
        for (scale, side) in [(0, 64), (1, 32), (2, 16)] {
            for k in 0..4 {
                assert_eq!(pyr.band(scale, k).unwrap().len(), side * side);
            }
        }
        assert_eq!(pyr.lowpass_residual().len(), 8 * 8);
        assert_eq!(pyr.highpass_residual().len(), 64 * 64);
        assert!(pyr.band(3, 0).is_err());
        assert!(pyr.band(0, 4).is_err());
    }

    #[test]
    fn perfect_reconstruction() {
        for (side, n, k) in [(32, 2, 4), (64, 3, 1), (64, 3, 2), (32, 1, 6), (16, 2, 2)] {
            let img = noise(side, side as u64 + k as u64);
            let pyr = Pyramid::build(&img, PyramidParams::new(n, k)).unwrap();
            let err = rel_l2(pyr.collapse().data(), img.data());
            assert!(err < 1e-12, "side {side} N {n} K {k}: {err}");
        }
    }

    #[test]
    fn constant_image_routes_to_lowpass() {
        let img = Image::filled(32, 32, 5.0).unwrap();
        let pyr = Pyramid::build(&img, PyramidParams::new(2, 4)).unwrap();
        for s in 0..2 {
            for k in 0..4 {
                let peak = pyr.band(s, k).unwrap().iter().map(|c| c.norm()).fold(0.0, f64::max);
                assert!(peak <= 1e-10);
            }
        }
        let lp = pyr.lowpass_residual();
        let mean = lp.iter().sum::<f64>() / lp.len() as f64;
        assert!((mean - 5.0).abs() < 1e-10);
        let back = pyr.collapse();
        assert!(back.data().iter().all(|v| (v - 5.0).abs() < 1e-9));
    }

    #[test]
    fn components_sum_to_image() {
        let img = noise(32, 9);
        let pyr = Pyramid::build(&img, PyramidParams::new(2, 3)).unwrap();
        let mut acc = pyr.reconstruct_lowpass().into_data();
        let hp = pyr.reconstruct_highpass();
        acc.iter_mut().zip(hp.data()).for_each(|(a, b)| *a += b);
        for s in 0..2 {
            for k in 0..3 {
                let r = pyr.reconstruct_band(s, k).unwrap();
                acc.iter_mut().zip(r.data()).for_each(|(a, b)| *a += b);
            }
        }
        assert!(rel_l2(&acc, img.data()) < 1e-10);
    }

    #[test]
    fn oriented_lowpass_sums_to_centered_lowpass() {
        let img = noise(32, 4);
        let pyr = Pyramid::build(&img, PyramidParams::new(2, 4)).unwrap();
        let lp = pyr.reconstruct_lowpass();
        let mean = lp.mean();
        let mut acc = vec![0.0; lp.len()];
        for k in 0..4 {
            let o = pyr.reconstruct_lowpass_oriented(k).unwrap();
            assert!(o.mean().abs() < 1e-12);
            acc.iter_mut().zip(o.data()).for_each(|(a, b)| *a += b);
        }
        for (a, l) in acc.iter().zip(lp.data()) {
            assert!((a - (l - mean)).abs() < 1e-10);
        }
    }

    #[test]
    fn zeroed_band_reconstructs_to_zero() {
        let img = noise(32, 2);
        let pyr = Pyramid::build(&img, PyramidParams::new(2, 2)).unwrap();
        let (plan, mut bands, lp, hp) = pyr.into_parts();
        bands[1][0].iter_mut().for_each(|v| *v = Complex64::default());
        let pyr = Pyramid::from_parts(plan, bands, lp, hp).unwrap();
        let r = pyr.reconstruct_band(1, 0).unwrap();
        assert!(r.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn from_parts_rejects_bad_sizes() {
        let img = noise(32, 2);
        let pyr = Pyramid::build(&img, PyramidParams::new(2, 2)).unwrap();
        let (plan, mut bands, lp, hp) = pyr.into_parts();
        bands[1][1].pop();
        assert!(Pyramid::from_parts(plan, bands, lp, hp).is_err());
    }

    #[test]
    fn upsampled_band_matches_finest_grid_samples() {
        let img = noise(32, 5);
        let pyr = Pyramid::build(&img, PyramidParams::new(3, 2)).unwrap();
        for scale in 0..3 {
            let up = pyr.upsampled_band(scale, 1).unwrap();
            let band = pyr.band(scale, 1).unwrap();
            let m = pyr.band_side(scale);
            let stride = 1 << scale;
            for y in 0..m {
                for x in 0..m {
                    let d = up[(y * stride) * 32 + x * stride] - band[y * m + x];
                    assert!(d.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn impulse_recovers_filter_kernels() {
        let side = 16;
        let mut data = vec![0.0; side * side];
        data[0] = 1.0;
        let img = Image::new(side, side, data).unwrap();
        let params = PyramidParams::new(2, 2);
        let pyr = Pyramid::build(&img, params).unwrap();
        let bank = FilterBank::new(2);
        let fft = Fft2::new(side);
        let grid = polar_grid(side);
        for k in 0..2 {
            let mut kernel: Vec<Complex64> = grid
                .iter()
                .map(|&(r, t)| Complex64::new(initial_lowpass(r) * bank.bandpass(k, r, t), 0.0))
                .collect();
            fft.inverse(&mut kernel);
            let band = pyr.band(0, k).unwrap();
            for (a, b) in band.iter().zip(&kernel) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
