use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::covariance::{cov_unchecked, CovarianceModel};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Event, PatternBuilder, PointPattern, SpatialWindow, TimeInterval};
use crate::rng;

/// Largest number of grid cells the dense simulator accepts.
pub const MAX_LGCP_CELLS: usize = 5000;

/// Latent field and counts from one grid simulation.
#[derive(Debug, Clone)]
pub struct LgcpRealization {
    pub pattern: PointPattern,
    /// `S` at each cell centre, x fastest then y then t.
    pub field: Vec<f64>,
    pub grid: [usize; 3],
}

/// Simulates a log-Gaussian Cox process on a regular grid.
///
/// The field is drawn at cell centres with mean `−σ²/2`, so `E e^S = 1`, and
/// each cell receives `Poisson(λ₀ e^S · |cell|)` uniformly placed events.
pub fn sim_lgcp(
    model: &CovarianceModel,
    lambda0: f64,
    grid: [usize; 3],
    window: SpatialWindow,
    interval: TimeInterval,
    seed: u64,
) -> Result<LgcpRealization> {
    let [gx, gy, gt] = grid;
    let cells = gx * gy * gt;
    if cells == 0 || cells > MAX_LGCP_CELLS {
        return Err(invalid(format!("grid has {cells} cells; must be between 1 and {MAX_LGCP_CELLS}")));
    }
    if !(lambda0.is_finite() && lambda0 >= 0.0) {
        return Err(invalid("baseline intensity must be finite and nonnegative"));
    }
    let (dx, dy, dt) = (window.width() / gx as f64, window.height() / gy as f64, interval.length() / gt as f64);
    let centre = |k: usize| -> [f64; 3] {
        let (ix, iy, it) = (k % gx, (k / gx) % gy, k / (gx * gy));
        [
            window.x0 + (ix as f64 + 0.5) * dx,
            window.y0 + (iy as f64 + 0.5) * dy,
            interval.t0 + (it as f64 + 0.5) * dt,
        ]
    };
    let p = model.params.as_array();
    let s2 = p[0] * p[0];
    let centres: Vec<[f64; 3]> = (0..cells).map(centre).collect();
    let cov = DMatrix::from_fn(cells, cells, |i, j| {
        let (a, b) = (centres[i], centres[j]);
        let r = (a[0] - b[0]).hypot(a[1] - b[1]);
        let v = cov_unchecked(model.family, &p, r, (a[2] - b[2]).abs());
        if i == j {
            v + 1e-8 * s2
        } else {
            v
        }
    });
    let chol = cov.cholesky().ok_or_else(|| {
        Error::NotPositiveDefinite(format!("{} with {:?}", model.family.name(), model.params))
    })?;
    let l = chol.l();

    let mut rng = rng::stream(seed);
    let z: Vec<f64> = (0..cells).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mean = -0.5 * s2;
    let field: Vec<f64> = (0..cells).map(|i| mean + (0..=i).map(|j| l[(i, j)] * z[j]).sum::<f64>()).collect();

    let vol = dx * dy * dt;
    let mut events = Vec::new();
    for (k, s) in field.iter().enumerate() {
        let m = lambda0 * s.exp() * vol;
        if !(m > 0.0) {
            continue;
        }
        let count = Poisson::new(m).map_err(|e| invalid(e.to_string()))?.sample(&mut rng) as usize;
        let c = centres[k];
        for _ in 0..count {
            events.push(Event {
                x: c[0] + dx * (rng.gen::<f64>() - 0.5),
                y: c[1] + dy * (rng.gen::<f64>() - 0.5),
                t: c[2] + dt * (rng.gen::<f64>() - 0.5),
            });
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let pattern = PatternBuilder::new(events).window(window).interval(interval).build()?;
    Ok(LgcpRealization { pattern, field, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgcp::{CovFamily, CovParams};

    fn model(sigma: f64) -> CovarianceModel {
        CovarianceModel::new(CovFamily::SepExp, CovParams::new(sigma, 0.15, 0.2).unwrap()).unwrap()
    }

    fn counts(sigma: f64, reps: u64) -> Vec<f64> {
        (0..reps)
            .map(|s| {
                sim_lgcp(&model(sigma), 100.0, [6, 6, 4], SpatialWindow::unit(), TimeInterval::unit(), s)
                    .unwrap()
                    .pattern
                    .len() as f64
            })
            .collect()
    }

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn degenerate_field_is_poisson() {
        let (m, v) = mean_var(&counts(1e-4, 200));
        assert!((m - 100.0).abs() < 3.0 * (100.0f64 / 200.0).sqrt());
        assert!((v / m - 1.0).abs() < 0.3, "dispersion {}", v / m);
    }

    #[test]
    fn mean_count_and_overdispersion() {
        let c = counts(1.0, 200);
        let (m, v) = mean_var(&c);
        assert!((m - 100.0).abs() < 3.0 * (v / 200.0).sqrt(), "mean {m}");
        assert!(v / m > 1.5, "ratio {}", v / m);
    }

    #[test]
    fn rejects_large_grid() {
        let r = sim_lgcp(&model(1.0), 1.0, [20, 20, 20], SpatialWindow::unit(), TimeInterval::unit(), 1);
        assert!(r.is_err());
    }
}
