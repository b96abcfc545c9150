//! Regular-grid spatio-temporal covariates built by inverse-distance
//! weighting of scattered samples.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{SpatialWindow, TimeInterval};

/// A covariate observation `(x, y, t, value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub value: f64,
}

/// Grid resolution for [`interpolate_idw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// `nx = ny = nt = ceil(mult * J^(1/3))` for `J` samples.
    Mult(f64),
    Dims { nx: usize, ny: usize, nt: usize },
}

/// Values on a regular lattice, x index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateGrid {
    pub name: String,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub step: [f64; 3],
    pub values: Vec<f64>,
}

/// Result of an interpolation run.
#[derive(Debug, Clone)]
pub struct Interpolated {
    pub grid: CovariateGrid,
    /// Sample sites that appeared more than once with different values;
    /// each such site was replaced by the mean of its values.
    pub conflicting_duplicates: usize,
}

impl CovariateGrid {
    pub fn new(name: impl Into<String>, dims: [usize; 3], origin: [f64; 3], step: [f64; 3], values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(invalid("grid dimensions must be positive"));
        }
        if step.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("grid steps must be positive"));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(invalid(format!(
                "grid holds {} values, expected {}",
                values.len(),
                dims[0] * dims[1] * dims[2]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        Ok(Self { name: name.into(), dims, origin, step, values })
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.step[0],
            self.origin[1] + j as f64 * self.step[1],
            self.origin[2] + k as f64 * self.step[2],
        ]
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Nearest node index along each axis, clamped to the grid. Exact
    /// half-way ties resolve to the lower index.
    pub fn nearest_index(&self, x: f64, y: f64, t: f64) -> [usize; 3] {
        let q = [x, y, t];
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = (q[a] - self.origin[a]) / self.step[a];
            let i = (f - 0.5).ceil();
            out[a] = if i.is_nan() || i <= 0.0 {
                0
            } else {
                (i as usize).min(self.dims[a] - 1)
            };
        }
        out
    }

    /// Value at the grid node closest to `(x, y, t)` in index-scaled
    /// coordinates.
    pub fn lookup_nearest(&self, x: f64, y: f64, t: f64) -> f64 {
        let [i, j, k] = self.nearest_index(x, y, t);
        self.value(i, j, k)
    }
}

fn dims_for(spec: GridSpec, n_samples: usize) -> Result<[usize; 3]> {
    match spec {
        GridSpec::Mult(m) => {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid("grid multiplier must be positive"));
            }
            let n = (m * (n_samples as f64).cbrt()).ceil().max(1.0) as usize;
            Ok([n, n, n])
        }
        GridSpec::Dims { nx, ny, nt } => {
            if nx == 0 || ny == 0 || nt == 0 {
                return Err(invalid("grid dimensions must be positive"));
            }
            Ok([nx, ny, nt])
        }
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> f64 {
    if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        (hi - lo).max(f64::MIN_POSITIVE)
    }
}

/// Collapses exactly repeated sites to their mean value and returns the
/// samples in canonical (x, y, t) order together with the number of sites
/// whose values disagreed.
fn canonical_samples(samples: &[CovariateSample]) -> (Vec<CovariateSample>, usize) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.t.total_cmp(&b.t))
            .then(a.value.total_cmp(&b.value))
    });
    let mut out: Vec<CovariateSample> = Vec::with_capacity(sorted.len());
    let mut conflicts = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len()
            && sorted[j].x == sorted[i].x
            && sorted[j].y == sorted[i].y
            && sorted[j].t == sorted[i].t
        {
            j += 1;
        }
        let group = &sorted[i..j];
        let mut s = group[0];
        if group.iter().any(|g| g.value != s.value) {
            conflicts += 1;
            s.value = group.iter().map(|g| g.value).sum::<f64>() / group.len() as f64;
        }
        out.push(s);
        i = j;
    }
    (out, conflicts)
}

/// Shepard interpolation onto a regular lattice covering `window × interval`.
///
/// Node values are `Σ wⱼ zⱼ / Σ wⱼ` with `wⱼ = dⱼ^(-power)`, `dⱼ` the
/// Euclidean distance in `(x, y, t)`. A node within `1e-12` of a sample takes
/// that sample's value.
pub fn interpolate_idw(
    samples: &[CovariateSample],
    name: &str,
    spec: GridSpec,
    power: f64,
    window: SpatialWindow,
    interval: TimeInterval,
) -> Result<Interpolated> {
    if samples.is_empty() {
        return Err(Error::Empty("no covariate samples".into()));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(invalid(format!("IDW power must be positive, got {power}")));
    }
    if samples
        .iter()
        .any(|s| !(s.x.is_finite() && s.y.is_finite() && s.t.is_finite() && s.value.is_finite()))
    {
        return Err(invalid("covariate samples must be finite"));
    }
    let (sites, conflicting_duplicates) = canonical_samples(samples);
    if conflicting_duplicates > 0 {
        log::warn!("{conflicting_duplicates} duplicate covariate sites with conflicting values; using means");
    }
    let dims = dims_for(spec, samples.len())?;
    let origin = [window.x0, window.y0, interval.t0];
    let step = [
        axis(window.x0, window.x1, dims[0]),
        axis(window.y0, window.y1, dims[1]),
        axis(interval.t0, interval.t1, dims[2]),
    ];
    let total = dims[0] * dims[1] * dims[2];
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            let p = [
                origin[0] + i as f64 * step[0],
                origin[1] + j as f64 * step[1],
                origin[2] + k as f64 * step[2],
            ];
            idw_at(&sites, p, power)
        })
        .collect();
    let grid = CovariateGrid::new(name, dims, origin, step, values)?;
    Ok(Interpolated { grid, conflicting_duplicates })
}

fn idw_at(sites: &[CovariateSample], p: [f64; 3], power: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in sites {
        let d = ((p[0] - s.x).powi(2) + (p[1] - s.y).powi(2) + (p[2] - s.t).powi(2)).sqrt();
        if d < 1e-12 {
            return s.value;
        }
        let w = d.powf(-power);
        num += w * s.value;
        den += w;
    }
    // Very large powers can underflow every weight; fall back to the nearest
    // site, which is the limit of the weighting.
    if den == 0.0 || !den.is_finite() || !num.is_finite() {
        return nearest_site(sites, p).value;
    }
    let v = num / den;
    // Keep the convex-combination bound exact under rounding.
    let (lo, hi) = sites
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s.value), h.max(s.value)));
    v.clamp(lo, hi)
}

fn nearest_site(sites: &[CovariateSample], p: [f64; 3]) -> CovariateSample {
    *sites
        .iter()
        .min_by(|a, b| {
            let da = (p[0] - a.x).powi(2) + (p[1] - a.y).powi(2) + (p[2] - a.t).powi(2);
            let db = (p[0] - b.x).powi(2) + (p[1] - b.y).powi(2) + (p[2] - b.t).powi(2);
            da.total_cmp(&db)
        })
        .expect("non-empty")
}

/// Interpolated value at an arbitrary location (no grid).
pub fn idw_value(samples: &[CovariateSample], x: f64, y: f64, t: f64, power: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("no covariate samples".into()));
    }
    let (sites, _) = canonical_samples(samples);
    Ok(idw_at(&sites, [x, y, t], power))
}
