//! Procedural textures for tests, demos and desk-scale experiments.
//!
//! All generators are deterministic in their arguments. [`corpus`] produces
//! a labelled four-class set normalized like the training data (mean 127,
//! standard deviation 40).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::eval::LabeledImage;
use crate::fft::{polar_grid, Fft2};
use crate::image::{normalize, Image};

/// Class names produced by [`corpus`].
pub const CLASSES: [&str; 4] = ["grating", "blobs", "streaks", "blocks"];

/// Mean and standard deviation every corpus image is normalized to.
pub const NORMALIZE_MEAN: f64 = 127.0;
pub const NORMALIZE_STD: f64 = 40.0;

/// `cos(2 pi (fx x + fy y) / side + phase)` with `(fx, fy)` = `cycles` along
/// direction `angle`.
pub fn grating(side: usize, cycles: f64, angle: f64, phase: f64) -> Result<Image> {
    let (fx, fy) = (cycles * angle.cos(), cycles * angle.sin());
    let s = side as f64;
    Image::from_fn(side, side, |x, y| {
        (2.0 * PI * (fx * x as f64 + fy * y as f64) / s + phase).cos()
    })
}

/// White Gaussian noise shaped by a Gaussian ring in frequency: radius
/// `center` and width `width` (radians per sample). With `orientation =
/// Some((angle, spread))` the spectrum is further weighted by a von Mises
/// style lobe around `angle` (and its mirror) of angular width `spread`.
pub fn filtered_noise(
    side: usize,
    center: f64,
    width: f64,
    orientation: Option<(f64, f64)>,
    seed: u64,
) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fft = Fft2::new(side);
    let white: Vec<f64> = (0..side * side).map(|_| rng.sample(StandardNormal)).collect();
    let spec = fft.forward_real(&white);
    let grid = polar_grid(side);
    let shaped: Vec<Complex64> = spec
        .iter()
        .zip(&grid)
        .map(|(v, &(r, t))| {
            let radial = (-0.5 * ((r - center) / width).powi(2)).exp();
            let angular = match orientation {
                Some((a, spread)) => {
                    // cos(2 d) is symmetric under d -> d + pi
                    (((2.0 * (t - a)).cos() - 1.0) / (spread * spread)).exp()
                }
                None => 1.0,
            };
            if r == 0.0 {
                Complex64::default()
            } else {
                v * radial * angular
            }
        })
        .collect();
    Image::new(side, side, fft.inverse_real(shaped))
}

/// Random piecewise-constant blocks of side `block` on a jittered lattice.
pub fn blocks(side: usize, block: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = block.max(1);
    let cells = side.div_ceil(block);
    let levels: Vec<f64> = (0..cells * cells).map(|_| rng.random_range(0.0..1.0)).collect();
    let (ox, oy) = (rng.random_range(0..block), rng.random_range(0..block));
    Image::from_fn(side, side, |x, y| {
        let cx = ((x + ox) / block) % cells;
        let cy = ((y + oy) / block) % cells;
        levels[cy * cells + cx]
    })
}

/// One image of class `class` (index into [`CLASSES`]), before normalization.
pub fn sample(class: usize, side: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise_seed = rng.random();
    let base = match class % CLASSES.len() {
        0 => {
            let cycles = side as f64 * rng.random_range(0.06..0.2);
            let angle = rng.random_range(0.0..PI);
            let g = grating(side, cycles, angle, rng.random_range(0.0..2.0 * PI))?;
            // a little broadband texture keeps every band populated
            let n = filtered_noise(side, 1.5, 0.6, None, noise_seed)?;
            let (gs, ns) = (g.std_dev(), n.std_dev().max(1e-12));
            let data = g.data().iter().zip(n.data()).map(|(a, b)| a + 0.15 * gs * b / ns).collect();
            Image::new(side, side, data)?
        }
        1 => filtered_noise(side, rng.random_range(0.3..0.9), rng.random_range(0.1..0.3), None, noise_seed)?,
        2 => {
            let orient = (rng.random_range(0.0..PI), rng.random_range(0.3..0.6));
            filtered_noise(side, rng.random_range(0.5..1.5), 0.4, Some(orient), noise_seed)?
        }
        _ => blocks(side, rng.random_range(3..9), noise_seed)?,
    };
    Ok(base)
}

/// `per_class` normalized images of each class in [`CLASSES`].
pub fn corpus(per_class: usize, side: usize, seed: u64) -> Result<Vec<LabeledImage>> {
    let mut out = Vec::with_capacity(per_class * CLASSES.len());
    for (c, name) in CLASSES.iter().enumerate() {
        for i in 0..per_class {
            let s = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((c * 100_000 + i) as u64);
            let img = normalize(&sample(c, side, s)?, NORMALIZE_MEAN, NORMALIZE_STD)?;
            out.push(LabeledImage {
                class: name.to_string(),
                id: format!("{name}_{i:03}"),
                image: img,
            });
        }
    }
    Ok(out)
}
