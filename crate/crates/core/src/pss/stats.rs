//! The ten statistic groups as functions of the pyramid's source-resolution
//! images, with their exact derivatives.
//!
//! Conventions: population moments (divide by the pixel count), skewness and
//! kurtosis are standardized (kurtosis is not excess), and every normalized
//! quantity is 0 when a variance falls below [`VAR_EPS`].

use super::layout::{PssLayout, PssParams};

/// Variance below which an image counts as constant.
pub const VAR_EPS: f64 = 1e-12;

/// Every source-resolution image the statistic reads.
#[derive(Debug, Clone)]
pub(crate) struct Intermediates {
    pub side: usize,
    pub pixels: Vec<f64>,
    /// Band back-projections, flat `scale * K + orientation`.
    pub recon: Vec<Vec<f64>>,
    /// Oriented low-pass back-projections, one per orientation.
    pub lowpass_oriented: Vec<Vec<f64>>,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    /// Complex band magnitudes at source resolution, flat `scale * K + orientation`.
    pub magnitude: Vec<Vec<f64>>,
}

/// Gradients with respect to each field of [`Intermediates`].
#[derive(Debug, Clone)]
pub(crate) struct IntermediateGrads {
    pub pixels: Vec<f64>,
    pub recon: Vec<Vec<f64>>,
    pub lowpass_oriented: Vec<Vec<f64>>,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

impl IntermediateGrads {
    fn zeros(params: &PssParams, pixels: usize) -> Self {
        let nk = params.n_scales * params.n_orientations;
        IntermediateGrads {
            pixels: vec![0.0; pixels],
            recon: vec![vec![0.0; pixels]; nk],
            lowpass_oriented: vec![vec![0.0; pixels]; params.n_orientations],
            lowpass: vec![0.0; pixels],
            highpass: vec![0.0; pixels],
            magnitude: vec![vec![0.0; pixels]; nk],
        }
    }
}

// ---------------------------------------------------------------- primitives

#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub mean: f64,
    pub var: f64,
    pub m3: f64,
    pub m4: f64,
}

impl Moments {
    pub fn of(x: &[f64]) -> Self {
        let p = x.len() as f64;
        let mean = x.iter().sum::<f64>() / p;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in x {
            let c = v - mean;
            let c2 = c * c;
            m2 += c2;
            m3 += c2 * c;
            m4 += c2 * c2;
        }
        Moments {
            mean,
            var: m2 / p,
            m3: m3 / p,
            m4: m4 / p,
        }
    }

    pub fn skewness(&self) -> f64 {
        if self.var < VAR_EPS {
            0.0
        } else {
            self.m3 / self.var.powf(1.5)
        }
    }

    pub fn kurtosis(&self) -> f64 {
        if self.var < VAR_EPS {
            0.0
        } else {
            self.m4 / (self.var * self.var)
        }
    }

    /// Accumulates `g_mean dmean + g_var dvar + g_skew dskew + g_kurt dkurt`
    /// with respect to `x` into `out`.
    pub fn backward(&self, x: &[f64], g_mean: f64, g_var: f64, g_skew: f64, g_kurt: f64, out: &mut [f64]) {
        let p = x.len() as f64;
        let live = self.var >= VAR_EPS;
        // chain everything into coefficients on dm2, dm3, dm4
        let mut c2 = g_var;
        let (mut c3, mut c4) = (0.0, 0.0);
        if live {
            let v = self.var;
            c3 += g_skew / v.powf(1.5);
            c2 += -1.5 * g_skew * self.m3 / v.powf(2.5);
            c4 += g_kurt / (v * v);
            c2 += -2.0 * g_kurt * self.m4 / (v * v * v);
        }
        for (o, &xv) in out.iter_mut().zip(x) {
            let c = xv - self.mean;
            let dm2 = 2.0 * c;
            let dm3 = 3.0 * c * c - 3.0 * self.var;
            let dm4 = 4.0 * c * c * c - 4.0 * self.m3;
            *o += (g_mean + c2 * dm2 + c3 * dm3 + c4 * dm4) / p;
        }
    }
}

/// Mean-removed image scaled to unit norm, so that Pearson correlation is a
/// dot product.
pub(crate) struct Standardized {
    z: Vec<f64>,
    /// `sigma * sqrt(P)`; zero when the image is constant.
    norm: f64,
}

impl Standardized {
    pub fn of(x: &[f64]) -> Self {
        let m = Moments::of(x);
        if m.var < VAR_EPS {
            return Standardized { z: Vec::new(), norm: 0.0 };
        }
        let norm = (m.var * x.len() as f64).sqrt();
        Standardized {
            z: x.iter().map(|v| (v - m.mean) / norm).collect(),
            norm,
        }
    }

    fn live(&self) -> bool {
        self.norm > 0.0
    }
}

pub(crate) fn correlation(a: &Standardized, b: &Standardized) -> f64 {
    if !a.live() || !b.live() {
        return 0.0;
    }
    dot(&a.z, &b.z)
}

/// Accumulates `g * d corr(a, b)` into the two gradient buffers.
fn correlation_backward(
    a: &Standardized,
    b: &Standardized,
    rho: f64,
    g: f64,
    out_a: &mut [f64],
    out_b: &mut [f64],
) {
    if g == 0.0 || !a.live() || !b.live() {
        return;
    }
    let (sa, sb) = (g / a.norm, g / b.norm);
    for i in 0..a.z.len() {
        out_a[i] += sa * (b.z[i] - rho * a.z[i]);
        out_b[i] += sb * (a.z[i] - rho * b.z[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized circular auto-correlation over the centered `(2h+1)^2` lag
/// window, lags in row-major order (`dy` outer).
pub(crate) fn autocorrelation(x: &[f64], side: usize, h: usize) -> Vec<f64> {
    let w = 2 * h + 1;
    let m = Moments::of(x);
    if m.var < VAR_EPS {
        return vec![0.0; w * w];
    }
    let c: Vec<f64> = x.iter().map(|v| v - m.mean).collect();
    let norm = 1.0 / (x.len() as f64 * m.var);
    let mut out = Vec::with_capacity(w * w);
    for dy in -(h as isize)..=h as isize {
        for dx in -(h as isize)..=h as isize {
            if dy == 0 && dx == 0 {
                out.push(1.0);
                continue;
            }
            out.push(lag_product(&c, side, dy, dx) * norm);
        }
    }
    out
}

/// `sum_p c[p] c[p + d]` with circular indexing.
fn lag_product(c: &[f64], side: usize, dy: isize, dx: isize) -> f64 {
    let s = side as isize;
    let mut acc = 0.0;
    for y in 0..side {
        let row = &c[y * side..(y + 1) * side];
        let yy = (y as isize + dy).rem_euclid(s) as usize;
        let other = &c[yy * side..(yy + 1) * side];
        let shift = dx.rem_euclid(s) as usize;
        // other[(x + dx) mod side]
        let (head, tail) = other.split_at(shift);
        let n1 = side - shift;
        acc += dot(&row[..n1], tail) + dot(&row[n1..], head);
    }
    acc
}

fn autocorrelation_backward(x: &[f64], side: usize, h: usize, values: &[f64], g: &[f64], out: &mut [f64]) {
    let m = Moments::of(x);
    if m.var < VAR_EPS || g.iter().all(|&v| v == 0.0) {
        return;
    }
    let c: Vec<f64> = x.iter().map(|v| v - m.mean).collect();
    let norm = 1.0 / (x.len() as f64 * m.var);
    let s = side as isize;
    let w = 2 * h + 1;
    let mut self_coef = 0.0;
    for (li, (&gd, &ad)) in g.iter().zip(values).enumerate() {
        let dy = (li / w) as isize - h as isize;
        let dx = (li % w) as isize - h as isize;
        if gd == 0.0 || (dy == 0 && dx == 0) {
            continue;
        }
        self_coef += gd * ad;
        let k = gd * norm;
        for y in 0..side {
            let yp = (y as isize + dy).rem_euclid(s) as usize;
            let ym = (y as isize - dy).rem_euclid(s) as usize;
            for xq in 0..side {
                let xp = (xq as isize + dx).rem_euclid(s) as usize;
                let xm = (xq as isize - dx).rem_euclid(s) as usize;
                out[y * side + xq] += k * (c[yp * side + xp] + c[ym * side + xm]);
            }
        }
    }
    let k = -2.0 * self_coef * norm;
    for (o, cv) in out.iter_mut().zip(&c) {
        *o += k * cv;
    }
}

// -------------------------------------------------------------- group logic

/// Evaluates the full statistic vector in layout order.
pub(crate) fn evaluate(inter: &Intermediates, layout: &PssLayout) -> Vec<f64> {
    let params = layout.params();
    let (n, k) = (params.n_scales, params.n_orientations);
    let h = params.half_window();
    let side = inter.side;
    let mut v = Vec::with_capacity(layout.dim());

    // C1
    let m = Moments::of(&inter.pixels);
    let (lo, hi) = min_max(&inter.pixels);
    v.extend([m.mean, m.var, m.skewness(), m.kurtosis(), lo, hi]);

    let scales = scale_images(inter, n, k);

    // C2
    for s in &scales {
        let m = Moments::of(s);
        v.push(m.skewness());
        v.push(m.kurtosis());
    }
    // C3
    for r in &inter.recon {
        v.extend(autocorrelation(r, side, h));
    }
    // C4
    for s in &scales {
        v.extend(autocorrelation(s, side, h));
    }

    let mags: Vec<Standardized> = inter.magnitude.iter().map(|x| Standardized::of(x)).collect();
    let levels = oriented_levels(inter, n, k);
    let lev_std: Vec<Vec<Standardized>> = levels
        .iter()
        .map(|lv| lv.iter().map(|x| Standardized::of(x)).collect())
        .collect();

    // C5
    for s in 0..n {
        for a in 0..k {
            for b in 0..k {
                v.push(correlation(&mags[s * k + a], &mags[s * k + b]));
            }
        }
    }
    // C6
    for lv in &lev_std {
        for a in 0..k {
            for b in 0..k {
                v.push(correlation(&lv[a], &lv[b]));
            }
        }
    }
    // C7
    for s in 0..n {
        for a in 0..k {
            for lv in &lev_std {
                for b in 0..k {
                    v.push(correlation(&lev_std[s][a], &lv[b]));
                }
            }
        }
    }
    // C8
    for s in 0..n {
        for a in 0..k {
            for t in 0..n {
                for b in 0..k {
                    v.push(correlation(&mags[s * k + a], &mags[t * k + b]));
                }
            }
        }
    }
    // C9
    for r in &inter.recon {
        v.push(mean(r));
    }
    v.push(mean(&inter.lowpass));
    v.push(mean(&inter.highpass));
    // C10
    v.push(Moments::of(&inter.highpass).var);

    debug_assert_eq!(v.len(), layout.dim());
    v
}

/// Gradient of `sum_i dv[i] * stat[i]` with respect to every intermediate.
pub(crate) fn backward(inter: &Intermediates, layout: &PssLayout, dv: &[f64]) -> IntermediateGrads {
    let params = layout.params();
    let (n, k) = (params.n_scales, params.n_orientations);
    let h = params.half_window();
    let side = inter.side;
    let pixels = inter.pixels.len();
    let mut g = IntermediateGrads::zeros(&params, pixels);
    let ranges = layout.ranges();
    let group = |i: usize| &dv[ranges[i].clone()];

    // C1
    let d = group(0);
    let m = Moments::of(&inter.pixels);
    m.backward(&inter.pixels, d[0], d[1], d[2], d[3], &mut g.pixels);
    let (imin, imax) = arg_min_max(&inter.pixels);
    g.pixels[imin] += d[4];
    g.pixels[imax] += d[5];

    let scales = scale_images(inter, n, k);
    // gradients wrt each scale image (levels 0..n, level n = low-pass)
    let mut g_scales = vec![vec![0.0; pixels]; n + 1];

    // C2
    let d = group(1);
    for (lvl, s) in scales.iter().enumerate() {
        let m = Moments::of(s);
        m.backward(s, 0.0, 0.0, d[2 * lvl], d[2 * lvl + 1], &mut g_scales[lvl]);
    }
    // C3
    let d = group(2);
    let ww = params.neighborhood * params.neighborhood;
    for (i, r) in inter.recon.iter().enumerate() {
        let gd = &d[i * ww..(i + 1) * ww];
        if gd.iter().any(|&x| x != 0.0) {
            let vals = autocorrelation(r, side, h);
            autocorrelation_backward(r, side, h, &vals, gd, &mut g.recon[i]);
        }
    }
    // C4
    let d = group(3);
    for (lvl, s) in scales.iter().enumerate() {
        let gd = &d[lvl * ww..(lvl + 1) * ww];
        if gd.iter().any(|&x| x != 0.0) {
            let vals = autocorrelation(s, side, h);
            autocorrelation_backward(s, side, h, &vals, gd, &mut g_scales[lvl]);
        }
    }

    let mags: Vec<Standardized> = inter.magnitude.iter().map(|x| Standardized::of(x)).collect();
    let levels = oriented_levels(inter, n, k);
    // flat `level * K + orientation`
    let lev_std: Vec<Standardized> = levels.iter().flatten().map(|x| Standardized::of(x)).collect();
    let mut g_mags = vec![vec![0.0; pixels]; n * k];
    let mut g_levels = vec![vec![0.0; pixels]; (n + 1) * k];

    // C5
    let d = group(4);
    let mut idx = 0;
    for s in 0..n {
        for a in 0..k {
            for b in 0..k {
                pair_backward(&mags, &mut g_mags, s * k + a, s * k + b, d[idx]);
                idx += 1;
            }
        }
    }
    // C6
    let d = group(5);
    idx = 0;
    for lvl in 0..=n {
        for a in 0..k {
            for b in 0..k {
                pair_backward(&lev_std, &mut g_levels, lvl * k + a, lvl * k + b, d[idx]);
                idx += 1;
            }
        }
    }
    // C7
    let d = group(6);
    idx = 0;
    for s in 0..n {
        for a in 0..k {
            for t in 0..=n {
                for b in 0..k {
                    pair_backward(&lev_std, &mut g_levels, s * k + a, t * k + b, d[idx]);
                    idx += 1;
                }
            }
        }
    }
    // C8
    let d = group(7);
    idx = 0;
    for s in 0..n {
        for a in 0..k {
            for t in 0..n {
                for b in 0..k {
                    pair_backward(&mags, &mut g_mags, s * k + a, t * k + b, d[idx]);
                    idx += 1;
                }
            }
        }
    }
    // C9
    let d = group(8);
    for (i, gr) in g.recon.iter_mut().enumerate() {
        add_constant(gr, d[i] / pixels as f64);
    }
    add_constant(&mut g.lowpass, d[n * k] / pixels as f64);
    add_constant(&mut g.highpass, d[n * k + 1] / pixels as f64);
    // C10
    let d = group(9);
    Moments::of(&inter.highpass).backward(&inter.highpass, 0.0, d[0], 0.0, 0.0, &mut g.highpass);

    // fold the derived images back onto the stored intermediates
    for s in 0..n {
        for a in 0..k {
            let gr = &mut g.recon[s * k + a];
            add_into(gr, &g_scales[s]);
            add_into(gr, &g_levels[s * k + a]);
        }
    }
    add_into(&mut g.lowpass, &g_scales[n]);
    for a in 0..k {
        add_into(&mut g.lowpass_oriented[a], &g_levels[n * k + a]);
    }
    g.magnitude = g_mags;
    g
}

fn pair_backward(std: &[Standardized], grads: &mut [Vec<f64>], i: usize, j: usize, gv: f64) {
    if gv == 0.0 || i == j {
        return;
    }
    let rho = correlation(&std[i], &std[j]);
    let (gi, gj) = pair_mut(grads, i, j);
    correlation_backward(&std[i], &std[j], rho, gv, gi, gj);
}

/// Two distinct elements of `v`, mutably.
fn pair_mut(v: &mut [Vec<f64>], i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    assert_ne!(i, j);
    if i < j {
        let (left, right) = v.split_at_mut(j);
        (&mut left[i], &mut right[0])
    } else {
        let (left, right) = v.split_at_mut(i);
        (&mut right[0], &mut left[j])
    }
}

/// Per-scale reconstructions plus the low-pass reconstruction as level `n`.
fn scale_images(inter: &Intermediates, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    for s in 0..n {
        let mut acc = inter.recon[s * k].clone();
        for a in 1..k {
            add_into(&mut acc, &inter.recon[s * k + a]);
        }
        out.push(acc);
    }
    out.push(inter.lowpass.clone());
    out
}

/// Oriented images per level: band reconstructions for the `n` band scales,
/// oriented low-pass images for level `n`.
fn oriented_levels<'a>(inter: &'a Intermediates, n: usize, k: usize) -> Vec<Vec<&'a [f64]>> {
    let mut out: Vec<Vec<&[f64]>> = (0..n)
        .map(|s| (0..k).map(|a| inter.recon[s * k + a].as_slice()).collect())
        .collect();
    out.push(inter.lowpass_oriented.iter().map(|v| v.as_slice()).collect());
    out
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

fn add_constant(dst: &mut [f64], c: f64) {
    if c != 0.0 {
        dst.iter_mut().for_each(|d| *d += c);
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn min_max(x: &[f64]) -> (f64, f64) {
    let (i, j) = arg_min_max(x);
    (x[i], x[j])
}

/// First indices of the minimum and maximum.
fn arg_min_max(x: &[f64]) -> (usize, usize) {
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in x.iter().enumerate() {
        if v < x[imin] {
            imin = i;
        }
        if v > x[imax] {
            imax = i;
        }
    }
    (imin, imax)
}
