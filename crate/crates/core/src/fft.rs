//! Square 2-D FFTs and the frequency-grid bookkeeping shared by the pyramid
//! and the statistic gradient.
//!
//! Forward transforms are unscaled; inverse transforms are scaled by
//! `1 / (side * side)`. Spectra are stored in natural DFT order (DC at index
//! 0), row-major.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &*self.forward);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &*self.inverse);
        let norm = 1.0 / (self.side * self.side) as f64;
        buf.iter_mut().for_each(|v| *v *= norm);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spectrum);
        spectrum.into_iter().map(|v| v.re).collect()
    }

    fn run(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.side;
        assert_eq!(buf.len(), n * n, "buffer is not {n}x{n}");
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        transpose_in_place(buf, n);
        fft.process_with_scratch(buf, &mut scratch);
        transpose_in_place(buf, n);
    }
}

fn transpose_in_place(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Signed integer frequency of DFT index `j` on a grid of size `n`, in
/// `[-n/2, n/2)`.
#[inline]
pub(crate) fn signed_freq(j: usize, n: usize) -> isize {
    if j < n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

/// Index of the frequency `-f` for the DFT index of `f`.
#[inline]
pub(crate) fn neg_index(j: usize, n: usize) -> usize {
    (n - j) % n
}

/// Polar coordinates `(r, theta)` of every sample of an `n`x`n` frequency
/// grid, with `omega = 2*pi*f/n` per axis. `theta` is 0 at DC.
pub(crate) fn polar_grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let wy = 2.0 * PI * signed_freq(row, n) as f64 / n as f64;
        for col in 0..n {
            let wx = 2.0 * PI * signed_freq(col, n) as f64 / n as f64;
            let r = (wx * wx + wy * wy).sqrt();
            let theta = if r == 0.0 { 0.0 } else { wy.atan2(wx) };
            out.push((r, theta));
        }
    }
    out
}

/// Flat index of the sample at `(-fy, -fx)`.
pub(crate) fn neg_flat(idx: usize, n: usize) -> usize {
    neg_index(idx / n, n) * n + neg_index(idx % n, n)
}

/// Keeps the central half-band of an `n`x`n` spectrum: the `n/2`x`n/2`
/// spectrum holding frequencies in `[-n/4, n/4)` on each axis.
pub(crate) fn crop_half(spec: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = n / 2;
    let mut out = vec![Complex64::default(); m * m];
    for row in 0..m {
        let src_row = (signed_freq(row, m)).rem_euclid(n as isize) as usize;
        for col in 0..m {
            let src_col = (signed_freq(col, m)).rem_euclid(n as isize) as usize;
            out[row * m + col] = spec[src_row * n + src_col];
        }
    }
    out
}

/// Adjoint of [`crop_half`]: embeds an `m`x`m` spectrum into a zero `2m`x`2m`
/// spectrum at the same integer frequencies.
pub(crate) fn pad_double(spec: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = 2 * m;
    let mut out = vec![Complex64::default(); n * n];
    for row in 0..m {
        let dst_row = (signed_freq(row, m)).rem_euclid(n as isize) as usize;
        for col in 0..m {
            let dst_col = (signed_freq(col, m)).rem_euclid(n as isize) as usize;
            out[dst_row * n + dst_col] = spec[row * m + col];
        }
    }
    out
}
