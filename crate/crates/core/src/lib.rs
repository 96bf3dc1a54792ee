//! Texture statistics over a frequency-domain steerable pyramid, compressed
//! into low-dimensional texture codes with a two-level probabilistic PCA, and
//! turned back into images by iterative statistic matching.
//!
//! The pipeline is:
//!
//! 1. [`pyramid`] decomposes a square power-of-two [`Image`] into oriented
//!    complex band-pass subbands plus low-pass and high-pass residuals.
//! 2. [`pss`] reduces the decomposition to a flat statistic vector made of ten
//!    groups (marginals, auto-correlations, cross-correlations, means).
//! 3. [`ppca`] and [`hppca`] fit per-group PPCA models and a final PPCA over the
//!    concatenated group latents, giving an affine encoder/decoder.
//! 4. [`synthesis`] recovers an image whose statistics match a target vector by
//!    line-searched descent on an analytic gradient, and [`tss`] scores the
//!    result against its source with the maximum normalized cross-correlation.

pub mod archive;
pub mod error;
pub mod eval;
mod fft;
pub mod hppca;
pub mod image;
mod io;
pub mod ppca;
pub mod procedural;
pub mod pss;
pub mod pyramid;
pub mod synthesis;
pub mod tss;

pub use crate::error::{Error, Result};
pub use crate::hppca::HppcaModel;
pub use crate::image::Image;
pub use crate::ppca::PpcaModel;
pub use crate::pss::{PssLayout, PssParams, PssVector};
pub use crate::pyramid::{Pyramid, PyramidParams};
pub use crate::synthesis::SynthesisConfig;
pub use crate::tss::TssReport;
