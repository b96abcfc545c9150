use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::glm::{fit_glm, GlmOptions};
use super::quadrature::make_quadrature;
use super::stppm::{full_design, setup, Method};
use crate::covariates::CovariateGrid;
use crate::error::{invalid, Result};
use crate::formula::Formula;
use crate::geometry::PointPattern;

#[derive(Debug, Clone, Default)]
pub struct LocalOptions {
    /// Spatial bandwidth; Silverman's rule when absent.
    pub h_s: Option<f64>,
    /// Temporal bandwidth; Silverman's rule when absent.
    pub h_t: Option<f64>,
    pub nd: Option<[usize; 3]>,
    pub seed: u64,
}

/// One coefficient vector per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoissonFit {
    pub formula: String,
    pub coefficient_names: Vec<String>,
    /// Row i holds θ̂ᵢ; NaN when that fit failed.
    pub coefficients: Vec<Vec<f64>>,
    pub h_s: f64,
    pub h_t: f64,
    /// `exp(designᵢ · θ̂ᵢ)` at each event.
    pub fitted: Vec<f64>,
    /// Error message for events whose local fit failed.
    pub failures: Vec<Option<String>>,
    /// The unweighted fit used as the starting point.
    pub global: Vec<f64>,
}

fn sd(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Silverman's rule `1.06 σ̂ n^{-1/5}` per axis; `h_s` averages x and y.
pub fn silverman_bandwidths(pattern: &PointPattern) -> (f64, f64) {
    let ev = pattern.events();
    let f = 1.06 * (ev.len() as f64).powf(-0.2);
    let hx = f * sd(ev.iter().map(|e| e.x));
    let hy = f * sd(ev.iter().map(|e| e.y));
    let ht = f * sd(ev.iter().map(|e| e.t));
    (0.5 * (hx + hy), ht)
}

/// Local Poisson fits: for each event, the cubature likelihood reweighted by
/// a Gaussian kernel in space and time centred on it.
pub fn locstppm(pattern: &PointPattern, formula: &Formula, covs: &[CovariateGrid], opts: &LocalOptions) -> Result<LocalPoissonFit> {
    let n = pattern.len();
    let q = make_quadrature(pattern, opts.nd, opts.seed)?;
    let pts = q.points();
    let design = full_design(formula, &pts, covs, None)?;
    let p = design.ncols;
    if n < p + 2 {
        return Err(invalid(format!("local fits need at least {} events, got {n}", p + 2)));
    }
    let (sh, th) = silverman_bandwidths(pattern);
    let h_s = opts.h_s.unwrap_or(sh);
    let h_t = opts.h_t.unwrap_or(th);
    if !(h_s > 0.0 && h_t > 0.0 && h_s.is_finite() && h_t.is_finite()) {
        return Err(invalid(format!("bandwidths must be positive, got ({h_s}, {h_t})")));
    }
    let s = setup(&q, design, Method::Glm);
    let global = fit_glm(&s.design, &s.response, &s.weights, None, s.family, &GlmOptions::default())?;

    let events = pattern.events();
    let rows: Vec<std::result::Result<Vec<f64>, String>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = events[i];
            let w: Vec<f64> = (0..q.len())
                .map(|k| {
                    let ds = (q.x[k] - e.x).powi(2) + (q.y[k] - e.y).powi(2);
                    let dt = (q.t[k] - e.t).powi(2);
                    s.weights[k] * (-ds / (2.0 * h_s * h_s)).exp() * (-dt / (2.0 * h_t * h_t)).exp()
                })
                .collect();
            let opts = GlmOptions { start: Some(global.coefficients.clone()), ..Default::default() };
            fit_glm(&s.design, &s.response, &w, None, s.family, &opts)
                .map(|f| f.coefficients)
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut coefficients = Vec::with_capacity(n);
    let mut failures = Vec::with_capacity(n);
    let mut fitted = Vec::with_capacity(n);
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Ok(c) => {
                fitted.push(s.design.linear_predictor(i, &c).exp());
                coefficients.push(c);
                failures.push(None);
            }
            Err(msg) => {
                log::warn!("local fit at event {} failed: {msg}", i + 1);
                fitted.push(f64::NAN);
                coefficients.push(vec![f64::NAN; p]);
                failures.push(Some(msg));
            }
        }
    }
    Ok(LocalPoissonFit {
        formula: formula.to_string(),
        coefficient_names: s.design.names.clone(),
        coefficients,
        h_s,
        h_t,
        fitted,
        failures,
        global: global.coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{stppm, StppmOptions};
    use crate::formula::parse_formula;
    use crate::geometry::{Event, PatternBuilder, SpatialWindow, TimeInterval};
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn infinite_bandwidth_is_global() {
        let mut r = rng::stream(3);
        let ev = (0..40).map(|_| Event { x: r.gen(), y: r.gen(), t: r.gen() }).collect();
        let p = PatternBuilder::new(ev).window(SpatialWindow::unit()).interval(TimeInterval::unit()).build().unwrap();
        let f = parse_formula("~ x").unwrap();
        let opts = LocalOptions { h_s: Some(1e6), h_t: Some(1e6), nd: None, seed: 4 };
        let local = locstppm(&p, &f, &[], &opts).unwrap();
        let global = stppm(&p, &f, &[], &StppmOptions { seed: 4, ..Default::default() }).unwrap();
        for row in &local.coefficients {
            for (a, b) in row.iter().zip(&global.coefficients) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
