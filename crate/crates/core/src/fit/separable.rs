use serde::{Deserialize, Serialize};

use super::glm::{fit_glm, GlmOptions};
use super::quadrature::{make_marginal_quadrature, Quadrature, Support};
use super::stppm::{full_design, predict_intensity, setup, Convergence, FittedPoissonModel, Method};
use crate::covariates::CovariateGrid;
use crate::error::{invalid, Result};
use crate::formula::{DesignPoints, Formula};
use crate::geometry::PointPattern;

#[derive(Debug, Clone)]
pub struct SeparableOptions {
    /// Spatial cells `[nx, ny]` (networks: `nx·ny` arc-length cells).
    pub nd_space: Option<[usize; 2]>,
    pub nd_time: Option<usize>,
    pub seed: u64,
}

impl Default for SeparableOptions {
    fn default() -> Self {
        Self { nd_space: None, nd_time: None, seed: 1 }
    }
}

/// `λ(x, y, t) = normalization · λ̂_s(x, y) · λ̂_t(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableFit {
    pub spatial: FittedPoissonModel,
    pub temporal: FittedPoissonModel,
    /// Chosen so the fitted intensity integrates to the event count.
    pub normalization: f64,
    /// Fitted intensity at each data event.
    pub fitted: Vec<f64>,
    /// Time at which spatial covariates are read.
    pub t_ref: f64,
    /// Location at which temporal covariates are read.
    pub xy_ref: [f64; 2],
}

fn fit_marginal(
    pattern: &PointPattern,
    formula: &Formula,
    covs: &[CovariateGrid],
    support: Support,
    nd: [usize; 3],
    seed: u64,
) -> Result<(FittedPoissonModel, Quadrature, f64)> {
    let q = make_marginal_quadrature(pattern, support, Some(nd), seed)?;
    let pts = q.points();
    let design = full_design(formula, &pts, covs, None)?;
    let s = setup(&q, design, Method::Glm);
    let glm = fit_glm(&s.design, &s.response, &s.weights, None, s.family, &GlmOptions::default())?;
    let lam: Vec<f64> = (0..q.len()).map(|k| s.design.linear_predictor(k, &glm.coefficients).exp()).collect();
    let integral: f64 = lam.iter().zip(&q.weights).map(|(l, w)| l * w).sum();
    let fitted = q.data_rows().map(|k| lam[k]).collect();
    let model = FittedPoissonModel {
        formula: formula.to_string(),
        coefficient_names: s.design.names.clone(),
        coefficients: glm.coefficients,
        std_errors: glm.std_errors,
        method: Method::Glm,
        fitted,
        quadrature: q.meta.clone(),
        convergence: Convergence { iterations: glm.iterations, deviance: glm.deviance, score_norm: glm.score_norm },
        marked: None,
    };
    Ok((model, q, integral))
}

/// Fits the spatial and temporal marginals separately and multiplies them.
pub fn sep_fit(
    pattern: &PointPattern,
    space_formula: &Formula,
    time_formula: &Formula,
    covs: &[CovariateGrid],
    opts: &SeparableOptions,
) -> Result<SeparableFit> {
    if space_formula.references("t") {
        return Err(invalid("the spatial formula may not reference t"));
    }
    if time_formula.references("x") || time_formula.references("y") {
        return Err(invalid("the temporal formula may not reference x or y"));
    }
    let n = pattern.len();
    let c = ((4 * n.max(1)) as f64).sqrt().ceil() as usize;
    let [nx, ny] = opts.nd_space.unwrap_or([c, c]);
    let nt = opts.nd_time.unwrap_or(4 * n.max(1));
    let (spatial, _, int_s) = fit_marginal(pattern, space_formula, covs, Support::Space, [nx, ny, 1], opts.seed)?;
    let (temporal, _, int_t) =
        fit_marginal(pattern, time_formula, covs, Support::Time, [1, 1, nt], opts.seed.wrapping_add(1))?;
    let normalization = n as f64 / (int_s * int_t);
    let fitted = spatial.fitted.iter().zip(&temporal.fitted).map(|(a, b)| normalization * a * b).collect();
    let w = pattern.window();
    let iv = pattern.interval();
    Ok(SeparableFit {
        spatial,
        temporal,
        normalization,
        fitted,
        t_ref: 0.5 * (iv.t0 + iv.t1),
        xy_ref: [0.5 * (w.x0 + w.x1), 0.5 * (w.y0 + w.y1)],
    })
}

/// Separable intensity at arbitrary points.
pub fn predict_separable(fit: &SeparableFit, pts: &DesignPoints, covs: &[CovariateGrid]) -> Result<Vec<f64>> {
    let mut sp = pts.clone();
    sp.t = vec![fit.t_ref; pts.len()];
    let mut tp = pts.clone();
    tp.x = vec![fit.xy_ref[0]; pts.len()];
    tp.y = vec![fit.xy_ref[1]; pts.len()];
    let ls = predict_intensity(&fit.spatial, &sp, covs)?;
    let lt = predict_intensity(&fit.temporal, &tp, covs)?;
    Ok(ls.iter().zip(&lt).map(|(a, b)| fit.normalization * a * b).collect())
}
