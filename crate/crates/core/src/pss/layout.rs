use std::ops::Range;

use crate::error::{Error, Result};
use crate::pyramid::PyramidParams;

/// Number of statistic groups.
pub const GROUP_COUNT: usize = 10;

/// Short descriptions of the ten groups, in layout order.
pub const GROUP_NAMES: [&str; GROUP_COUNT] = [
    "pixel marginals",
    "scale skewness/kurtosis",
    "band auto-correlation",
    "scale auto-correlation",
    "band magnitude correlation within scale",
    "reconstruction correlation within level",
    "reconstruction correlation across levels",
    "band magnitude correlation across scales",
    "reconstruction means",
    "high-pass variance",
];

/// Pyramid size and auto-correlation neighborhood of the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PssParams {
    pub n_scales: usize,
    pub n_orientations: usize,
    /// Side of the square auto-correlation lag window (odd).
    pub neighborhood: usize,
}

impl Default for PssParams {
    fn default() -> Self {
        PssParams {
            n_scales: 4,
            n_orientations: 4,
            neighborhood: 7,
        }
    }
}

impl PssParams {
    pub fn new(n_scales: usize, n_orientations: usize, neighborhood: usize) -> Self {
        PssParams {
            n_scales,
            n_orientations,
            neighborhood,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scales == 0 || self.n_orientations == 0 {
            return Err(Error::InvalidArgument(format!(
                "need N >= 1 and K >= 1, got N={} K={}",
                self.n_scales, self.n_orientations
            )));
        }
        if self.neighborhood < 3 || self.neighborhood % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "neighborhood must be odd and >= 3, got {}",
                self.neighborhood
            )));
        }
        Ok(())
    }

    pub fn pyramid(&self) -> PyramidParams {
        PyramidParams::new(self.n_scales, self.n_orientations)
    }

    /// Half-width of the lag window.
    pub fn half_window(&self) -> usize {
        self.neighborhood / 2
    }

    /// Closed-form size of each group, `C1` first.
    pub fn group_sizes(&self) -> [usize; GROUP_COUNT] {
        let (n, k, m) = (self.n_scales, self.n_orientations, self.neighborhood);
        [
            6,
            2 * (n + 1),
            n * k * m * m,
            m * m * (n + 1),
            n * k * k,
            k * k * (n + 1),
            k * k * n * (n + 1),
            n * n * k * k,
            n * k + 2,
            1,
        ]
    }

    /// Total statistic dimension.
    pub fn dim(&self) -> usize {
        self.group_sizes().iter().sum()
    }
}

/// Total statistic dimension for the given parameters.
pub fn pss_dim(params: &PssParams) -> usize {
    params.dim()
}

/// Index map of the flat statistic vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PssLayout {
    params: PssParams,
    ranges: [Range<usize>; GROUP_COUNT],
}

impl PssLayout {
    pub fn new(params: PssParams) -> Result<Self> {
        params.validate()?;
        let sizes = params.group_sizes();
        let mut start = 0;
        let ranges = std::array::from_fn(|g| {
            let r = start..start + sizes[g];
            start = r.end;
            r
        });
        Ok(PssLayout { params, ranges })
    }

    pub fn params(&self) -> PssParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.ranges[GROUP_COUNT - 1].end
    }

    /// Index range of group `group` (1-based, `1..=10`).
    pub fn group_range(&self, group: usize) -> Result<Range<usize>> {
        if !(1..=GROUP_COUNT).contains(&group) {
            return Err(Error::IndexOutOfRange(format!(
                "statistic group C{group} does not exist (valid: C1..C10)"
            )));
        }
        Ok(self.ranges[group - 1].clone())
    }

    pub fn ranges(&self) -> &[Range<usize>; GROUP_COUNT] {
        &self.ranges
    }

    /// Column names, e.g. `C3.s2.o1.dy-3.dx2`. Scales are 1-based (scale
    /// `N+1` is the low-pass level), orientations 0-based.
    pub fn column_names(&self) -> Vec<String> {
        let PssParams {
            n_scales: n,
            n_orientations: k,
            neighborhood: _,
        } = self.params;
        let h = self.params.half_window() as isize;
        let lags: Vec<(isize, isize)> = (-h..=h).flat_map(|dy| (-h..=h).map(move |dx| (dy, dx))).collect();
        let mut names = Vec::with_capacity(self.dim());
        names.extend(["mean", "var", "skew", "kurt", "min", "max"].iter().map(|s| format!("C1.{s}")));
        for s in 1..=n + 1 {
            names.push(format!("C2.s{s}.skew"));
            names.push(format!("C2.s{s}.kurt"));
        }
        for s in 1..=n {
            for o in 0..k {
                for &(dy, dx) in &lags {
                    names.push(format!("C3.s{s}.o{o}.dy{dy}.dx{dx}"));
                }
            }
        }
        for s in 1..=n + 1 {
            for &(dy, dx) in &lags {
                names.push(format!("C4.s{s}.dy{dy}.dx{dx}"));
            }
        }
        for s in 1..=n {
            for a in 0..k {
                for b in 0..k {
                    names.push(format!("C5.s{s}.o{a}.o{b}"));
                }
            }
        }
        for s in 1..=n + 1 {
            for a in 0..k {
                for b in 0..k {
                    names.push(format!("C6.s{s}.o{a}.o{b}"));
                }
            }
        }
        for s in 1..=n {
            for a in 0..k {
                for t in 1..=n + 1 {
                    for b in 0..k {
                        names.push(format!("C7.s{s}.o{a}.s{t}.o{b}"));
                    }
                }
            }
        }
        for s in 1..=n {
            for a in 0..k {
                for t in 1..=n {
                    for b in 0..k {
                        names.push(format!("C8.s{s}.o{a}.s{t}.o{b}"));
                    }
                }
            }
        }
        for s in 1..=n {
            for o in 0..k {
                names.push(format!("C9.s{s}.o{o}"));
            }
        }
        names.push("C9.lowpass".to_string());
        names.push("C9.highpass".to_string());
        names.push("C10.highpass_var".to_string());
        names
    }
}
