use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texlat::pss::{extract_pss, PssParams};
use texlat::synthesis::{default_weights, pss_gradient, PssObjective};
use texlat::Image;

fn noise(side: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(side, side, |_, _| rng.random_range(0.0..1.0)).unwrap()
}

/// Worst relative error of the analytic gradient against central
/// differences, over the listed pixels.
fn worst_relative_error(img: &Image, target_img: &Image, params: PssParams, weights: Option<[f64; 10]>, pixels: &[usize]) -> f64 {
    let side = img.width();
    let target = extract_pss(target_img, params).unwrap();
    let w = weights.unwrap_or_else(|| default_weights(&target));
    let g = pss_gradient(img, &target, &w).unwrap();
    let obj = PssObjective::new(side, &target, w).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for &i in pixels {
        let mut a = img.data().to_vec();
        let mut b = a.clone();
        a[i] += eps;
        b[i] -= eps;
        let fd = (obj.value(&a).unwrap() - obj.value(&b).unwrap()) / (2.0 * eps);
        let an = g.data()[i];
        let scale = fd.abs().max(an.abs());
        if scale > 0.0 {
            worst = worst.max((an - fd).abs() / scale);
        }
    }
    worst
}

#[test]
fn matches_central_differences_small() {
    let params = PssParams::new(2, 2, 3);
    let all: Vec<usize> = (0..256).collect();
    for seed in 0..3 {
        let err = worst_relative_error(&noise(16, seed), &noise(16, 100 + seed), params, None, &all);
        assert!(err <= 1e-4, "seed {seed}: {err:e}");
    }
}

#[test]
fn matches_central_differences_odd_orientations() {
    let params = PssParams::new(2, 3, 5);
    let pixels: Vec<usize> = (0..1024).step_by(37).collect();
    let err = worst_relative_error(&noise(32, 7), &noise(32, 8), params, None, &pixels);
    assert!(err <= 1e-4, "{err:e}");
}

#[test]
fn matches_central_differences_per_group() {
    let params = PssParams::new(2, 2, 3);
    let pixels: Vec<usize> = (0..256).step_by(5).collect();
    for g in 0..10 {
        let mut w = [0.0; 10];
        w[g] = 1.0;
        let err = worst_relative_error(&noise(16, 20 + g as u64), &noise(16, 40), params, Some(w), &pixels);
        assert!(err <= 1e-4, "C{}: {err:e}", g + 1);
    }
}

#[test]
fn vanishes_at_the_target() {
    let params = PssParams::new(2, 2, 3);
    let img = noise(16, 3);
    let target = extract_pss(&img, params).unwrap();
    let g = pss_gradient(&img, &target, &default_weights(&target)).unwrap();
    assert!(g.data().iter().all(|v| v.abs() < 1e-9));
}
