//! Transfer functions of the steerable pyramid, in polar frequency
//! coordinates `(r, theta)` with `r` in radians per sample.
//!
//! The radial high-pass uses `0` below `pi/4` and `1` above `pi/2`. Printed
//! the other way round, the constant branches would be discontinuous with the
//! cosine transition and `H^2 + (L/2)^2 = 1` would fail; this orientation is
//! the only continuous one and gives a tight frame.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Radial low-pass `L(r)`: 2 in the pass-band, 0 in the stop-band, with a
/// raised-cosine transition on a log2 frequency axis between `pi/4` and `pi/2`.
pub fn radial_lowpass(r: f64) -> f64 {
    if r <= FRAC_PI_4 {
        2.0
    } else if r >= FRAC_PI_2 {
        0.0
    } else {
        2.0 * (FRAC_PI_2 * (4.0 * r / PI).log2()).cos()
    }
}

/// Radial high-pass `H(r)`, complementary to [`radial_lowpass`]:
/// `H(r)^2 + (L(r)/2)^2 = 1`.
pub fn radial_highpass(r: f64) -> f64 {
    if r <= FRAC_PI_4 {
        0.0
    } else if r >= FRAC_PI_2 {
        1.0
    } else {
        (FRAC_PI_2 * (2.0 * r / PI).log2()).cos()
    }
}

/// Initial low-pass `L0(r) = L(r/2) / 2`, cutting off at the Nyquist radius.
pub fn initial_lowpass(r: f64) -> f64 {
    radial_lowpass(r / 2.0) / 2.0
}

/// Initial high-pass `H0(r) = H(r/2)`.
pub fn initial_highpass(r: f64) -> f64 {
    radial_highpass(r / 2.0)
}

/// Angular normalization `alpha_K = 2^(K-1) (K-1)! / sqrt(K (2(K-1))!)`,
/// evaluated in log space.
pub fn angular_normalization(n_orientations: usize) -> f64 {
    assert!(n_orientations >= 1, "need at least one orientation");
    let k = n_orientations;
    let ln_fact = |n: usize| (2..=n).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_alpha = (k - 1) as f64 * 2f64.ln() + ln_fact(k - 1)
        - 0.5 * ((k as f64).ln() + ln_fact(2 * (k - 1)));
    ln_alpha.exp()
}

/// Angular gain `G_k(theta) = alpha_K cos(theta - pi k / K)^(K-1)` on the
/// half-plane `[-pi/2, pi/2)` around the orientation, 0 elsewhere.
///
/// The window is half-open so that exactly one of `theta` and `theta + pi`
/// falls inside it, which keeps the tiling exact even for `K = 1`.
pub fn angular(k: usize, n_orientations: usize, theta: f64) -> f64 {
    angular_with(angular_normalization(n_orientations), k, n_orientations, theta)
}

#[inline]
pub(crate) fn angular_with(alpha: f64, k: usize, n_orientations: usize, theta: f64) -> f64 {
    let d = wrap_angle(theta - PI * k as f64 / n_orientations as f64);
    if (-FRAC_PI_2..FRAC_PI_2).contains(&d) {
        alpha * d.cos().powi(n_orientations as i32 - 1)
    } else {
        0.0
    }
}

/// Wraps into `[-pi, pi)`.
#[inline]
pub(crate) fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// The complete set of transfer elements for a fixed orientation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBank {
    n_orientations: usize,
    alpha: f64,
}

impl FilterBank {
    pub fn new(n_orientations: usize) -> Self {
        FilterBank {
            n_orientations,
            alpha: angular_normalization(n_orientations),
        }
    }

    pub fn n_orientations(&self) -> usize {
        self.n_orientations
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lowpass(&self, r: f64) -> f64 {
        radial_lowpass(r)
    }

    pub fn highpass(&self, r: f64) -> f64 {
        radial_highpass(r)
    }

    pub fn initial_lowpass(&self, r: f64) -> f64 {
        initial_lowpass(r)
    }

    pub fn initial_highpass(&self, r: f64) -> f64 {
        initial_highpass(r)
    }

    pub fn angular(&self, k: usize, theta: f64) -> f64 {
        angular_with(self.alpha, k, self.n_orientations, theta)
    }

    /// Oriented band-pass `B_k(r, theta) = H(r) G_k(theta)`.
    pub fn bandpass(&self, k: usize, r: f64, theta: f64) -> f64 {
        radial_highpass(r) * self.angular(k, theta)
    }

    /// `sum_k [G_k(theta)^2 + G_k(theta + pi)^2]`, which equals 1.
    pub fn angular_energy(&self, theta: f64) -> f64 {
        (0..self.n_orientations)
            .map(|k| {
                let a = self.angular(k, theta);
                let b = self.angular(k, theta + PI);
                a * a + b * b
            })
            .sum()
    }
}
