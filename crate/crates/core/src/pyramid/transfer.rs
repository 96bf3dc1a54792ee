//! Closed-form full-resolution transfer functions of every pyramid output.
//!
//! The recursive crop/pad path in [`super::PyramidPlan`] is exact because each
//! crop only discards samples where the low-pass is already zero. The same
//! outputs can therefore be written as single diagonal operators on the
//! source spectrum, which is what the statistic gradient needs: each
//! operator here is `ifft(T * fft(x))` and its adjoint is the same
//! expression.

use super::filters::FilterBank;
use super::PyramidParams;
use crate::fft::{neg_flat, polar_grid};

pub(crate) struct Transfers {
    /// Complex band at source resolution, `[scale][orientation]`.
    pub band: Vec<Vec<Vec<f64>>>,
    /// Real band back-projection (Hermitian-symmetric), flat `scale * K + orientation`.
    pub recon: Vec<Vec<f64>>,
    /// Oriented low-pass back-projections, DC removed.
    pub lowpass_oriented: Vec<Vec<f64>>,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl Transfers {
    pub fn new(side: usize, params: PyramidParams) -> Self {
        let bank = FilterBank::new(params.n_orientations);
        let grid = polar_grid(side);
        let n = side * side;
        let mut path: Vec<f64> = grid.iter().map(|&(r, _)| bank.initial_lowpass(r)).collect();
        let mut band = Vec::with_capacity(params.n_scales);
        let mut recon = Vec::with_capacity(params.n_scales * params.n_orientations);
        for level in 0..params.n_scales {
            let zoom = (1usize << level) as f64;
            let scale_bands: Vec<Vec<f64>> = (0..params.n_orientations)
                .map(|k| {
                    (0..n)
                        .map(|i| {
                            let (r, t) = grid[i];
                            path[i] * bank.bandpass(k, zoom * r, t)
                        })
                        .collect()
                })
                .collect();
            for t in &scale_bands {
                recon.push((0..n).map(|i| t[i] * t[i] + t[neg_flat(i, side)].powi(2)).collect());
            }
            band.push(scale_bands);
            for (p, &(r, _)) in path.iter_mut().zip(&grid) {
                *p *= bank.lowpass(zoom * r) / 2.0;
            }
        }
        let lowpass: Vec<f64> = path.iter().map(|p| p * p).collect();
        let lowpass_oriented = (0..params.n_orientations)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        if i == 0 {
                            return 0.0;
                        }
                        let a = bank.angular(k, grid[i].1);
                        let b = bank.angular(k, grid[neg_flat(i, side)].1);
                        lowpass[i] * (a * a + b * b)
                    })
                    .collect()
            })
            .collect();
        let highpass = grid.iter().map(|&(r, _)| bank.initial_highpass(r).powi(2)).collect();
        Transfers {
            band,
            recon,
            lowpass_oriented,
            lowpass,
            highpass,
        }
    }
}
