//! Probabilistic PCA with the closed-form maximum-likelihood solution.
//!
//! With sample covariance eigenpairs `(lambda_i, u_i)` sorted decreasing, the
//! fit is `sigma^2 = mean(lambda_{q+1..D})` and
//! `W = U_q diag(sqrt(max(lambda_i - sigma^2, 0)))` with the rotation fixed
//! to the identity. Columns of `W` are therefore mutually orthogonal, and the
//! encoder and decoder are evaluated through the column norms `s_j^2`:
//!
//! * encode: `z = (W^T W + sigma^2 I)^-1 W^T (x - mu)`
//! * decode: `x = W (W^T W)^+ (W^T W + sigma^2 I) z + mu`
//!
//! so `decode(encode(x))` is the orthogonal projection of `x - mu` onto the
//! span of the non-zero columns, plus `mu`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::io::{Reader, Writer};

/// Eigenvalues at or below this fraction of the largest are treated as 0.
pub const RELATIVE_EIGEN_FLOOR: f64 = 1e-12;

/// Mean and covariance spectrum of a data set.
#[derive(Debug, Clone)]
pub struct Decomposition {
    n_samples: usize,
    mean: Vec<f64>,
    /// All `D` eigenvalues, non-increasing.
    eigenvalues: Vec<f64>,
    /// Unit eigenvectors (`D` rows) for the leading eigenvalues that could be
    /// resolved; the rest are implicitly zero columns.
    vectors: DMatrix<f64>,
}

impl Decomposition {
    /// Eigen-decomposes the population covariance of `rows` (one sample per
    /// row). The result does not depend on the order of the rows.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("samples have zero dimension".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {i} has a non-finite entry")));
            }
        }
        let mut sorted: Vec<&Vec<f64>> = rows.iter().collect();
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let mut mean = vec![0.0; d];
        for r in &sorted {
            mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let x = DMatrix::from_fn(n, d, |i, j| sorted[i][j] - mean[j]);

        let (mut eigenvalues, vectors) = if n < d {
            let gram = (&x * x.transpose()) / n as f64;
            let (vals, vecs) = sorted_eigen(gram);
            let floor = floor_of(&vals);
            let kept = vals.iter().take_while(|&&l| l > floor).count();
            let mut u = DMatrix::zeros(d, kept);
            for j in 0..kept {
                let col = x.transpose() * vecs.column(j) / (n as f64 * vals[j]).sqrt();
                u.set_column(j, &col);
            }
            (vals, orthonormalize(u))
        } else {
            let cov = (x.transpose() * &x) / n as f64;
            sorted_eigen(cov)
        };
        let floor = floor_of(&eigenvalues);
        eigenvalues.iter_mut().for_each(|l| {
            if *l <= floor {
                *l = 0.0;
            }
        });
        eigenvalues.resize(d, 0.0);
        let mut vectors = vectors;
        for mut col in vectors.column_iter_mut() {
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
                .0;
            if col[pivot] < 0.0 {
                col.neg_mut();
            }
        }
        Ok(Decomposition {
            n_samples: n,
            mean,
            eigenvalues,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest latent dimension the data supports: `min(n - 1, D)`.
    pub fn max_latent(&self) -> usize {
        (self.n_samples - 1).min(self.dim())
    }

    /// The maximum-likelihood model with `q` latent dimensions.
    pub fn model(&self, q: usize) -> Result<PpcaModel> {
        let d = self.dim();
        if q == 0 || q > self.max_latent() {
            return Err(Error::InvalidArgument(format!(
                "latent dimension {q} outside 1..={} (n={}, D={d})",
                self.max_latent(),
                self.n_samples
            )));
        }
        let sigma2 = if q == d {
            0.0
        } else {
            self.eigenvalues[q..].iter().sum::<f64>() / (d - q) as f64
        };
        let mut w = DMatrix::zeros(d, q);
        for j in 0..q.min(self.vectors.ncols()) {
            let gain = (self.eigenvalues[j] - sigma2).max(0.0).sqrt();
            if gain > 0.0 {
                w.set_column(j, &(self.vectors.column(j) * gain));
            }
        }
        PpcaModel::from_parts(self.mean.clone(), w, sigma2, self.eigenvalues.clone())
    }
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Removes the loss of orthogonality that the Gram route suffers for small
/// eigenvalues, keeping each column's direction.
fn orthonormalize(u: DMatrix<f64>) -> DMatrix<f64> {
    if u.ncols() == 0 {
        return u;
    }
    let qr = u.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

fn floor_of(vals: &[f64]) -> f64 {
    vals.first().copied().unwrap_or(0.0).max(0.0) * RELATIVE_EIGEN_FLOOR
}

/// A fitted PPCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct PpcaModel {
    mean: Vec<f64>,
    /// `D x q` loadings with orthogonal columns.
    w: DMatrix<f64>,
    sigma2: f64,
    eigenvalues: Vec<f64>,
    /// `q x D`.
    encoder: DMatrix<f64>,
    /// `D x q`.
    decoder: DMatrix<f64>,
}

impl PpcaModel {
    /// Fits a model with `q` latent dimensions to `rows`.
    pub fn fit(rows: &[Vec<f64>], q: usize) -> Result<Self> {
        Decomposition::new(rows)?.model(q)
    }

    /// Assembles a model from its stored fields. The columns of `w` must be
    /// mutually orthogonal.
    pub fn from_parts(mean: Vec<f64>, w: DMatrix<f64>, sigma2: f64, eigenvalues: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if w.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: w.nrows(),
            });
        }
        if eigenvalues.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: eigenvalues.len(),
            });
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance {sigma2}")));
        }
        if mean.iter().chain(w.iter()).chain(&eigenvalues).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        let q = w.ncols();
        let norms: Vec<f64> = w.column_iter().map(|c| c.norm_squared()).collect();
        for a in 0..q {
            for b in a + 1..q {
                let dot = w.column(a).dot(&w.column(b));
                if dot.abs() > 1e-9 * (norms[a] * norms[b]).sqrt().max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidArgument(format!(
                        "loading columns {a} and {b} are not orthogonal"
                    )));
                }
            }
        }
        let mut encoder = DMatrix::zeros(q, d);
        let mut decoder = DMatrix::zeros(d, q);
        for j in 0..q {
            let s2 = norms[j];
            let m = s2 + sigma2;
            if m > 0.0 {
                encoder.set_row(j, &(w.column(j).transpose() / m));
            }
            if s2 > 0.0 {
                decoder.set_column(j, &(w.column(j) * (m / s2)));
            }
        }
        Ok(PpcaModel {
            mean,
            w,
            sigma2,
            eigenvalues,
            encoder,
            decoder,
        })
    }

    /// Input dimension `D`.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Latent dimension `q`.
    pub fn latent_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn noise_variance(&self) -> f64 {
        self.sigma2
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Posterior mean of the latent variable.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder input".into()));
        }
        let c = nalgebra::DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, m)| a - m));
        Ok((&self.encoder * c).iter().copied().collect())
    }

    /// Optimal linear reconstruction from a latent vector.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.latent_dim(),
                actual: z.len(),
            });
        }
        let zv = nalgebra::DVector::from_column_slice(z);
        let x = &self.decoder * zv;
        Ok(x.iter().zip(&self.mean).map(|(a, m)| a + m).collect())
    }

    pub(crate) fn write(&self, w: &mut crate::io::Writer) {
        w.u64(self.dim() as u64);
        w.u64(self.latent_dim() as u64);
        w.f64(self.sigma2);
        w.f64s(&self.mean);
        // row-major
        for r in 0..self.w.nrows() {
            for c in 0..self.w.ncols() {
                w.f64(self.w[(r, c)]);
            }
        }
        w.f64s(&self.eigenvalues);
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        let d = r.count(8)?;
        let q = r.count(8)?;
        let sigma2 = r.f64()?;
        let mean = r.f64s(d)?;
        let total = d.checked_mul(q).ok_or_else(|| Error::CorruptContainer("loading size".into()))?;
        let flat = r.f64s(total)?;
        let w = DMatrix::from_row_slice(d, q, &flat);
        let eigenvalues = r.f64s(d)?;
        PpcaModel::from_parts(mean, w, sigma2, eigenvalues).map_err(|e| Error::CorruptContainer(e.to_string()))
    }

    /// Standalone binary block (no magic), as embedded in model containers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.into_inner()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "PPCA block");
        let m = Self::read(&mut r)?;
        r.finish()?;
        Ok(m)
    }
}

fn check_spectrum(lambda: &[f64]) -> Result<f64> {
    if lambda.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue spectrum".into()));
    }
    if lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument("eigenvalues must be finite and non-negative".into()));
    }
    if lambda.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("eigenvalues must be non-increasing".into()));
    }
    let total: f64 = lambda.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("all-zero eigenvalue spectrum".into()));
    }
    Ok(total)
}

/// Running fraction of the total eigenvalue mass.
pub fn cumulative_contribution(lambda: &[f64]) -> Result<Vec<f64>> {
    let total = check_spectrum(lambda)?;
    let mut acc = 0.0;
    Ok(lambda
        .iter()
        .map(|l| {
            acc += l;
            acc / total
        })
        .collect())
}

/// Smallest `q` whose cumulative contribution reaches `r`.
pub fn choose_dim(lambda: &[f64], r: f64) -> Result<usize> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {r} outside (0, 1]")));
    }
    let ccr = cumulative_contribution(lambda)?;
    Ok(ccr.iter().position(|&c| c >= r).unwrap_or(ccr.len() - 1) + 1)
}
