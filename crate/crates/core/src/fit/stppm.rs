use serde::{Deserialize, Serialize};

use super::glm::{fit_glm, Family, GlmFit, GlmOptions};
use super::quadrature::{make_marked_quadrature, make_quadrature, Quadrature, QuadratureMeta};
use crate::covariates::CovariateGrid;
use crate::error::{invalid, Result};
use crate::formula::{build_design, parse_formula, DesignMatrix, DesignPoints, Formula};
use crate::geometry::{MarkValues, PointPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Berman–Turner weighted Poisson regression.
    Glm,
    /// Logistic regression of data against dummy labels.
    Lsr,
}

#[derive(Debug, Clone)]
pub struct StppmOptions {
    pub method: Method,
    pub nd: Option<[usize; 3]>,
    pub seed: u64,
    /// Categorical mark whose levels get their own intercepts.
    pub marked: Option<String>,
    /// Ridge penalty on the per-type intercept contrasts.
    pub ridge: f64,
}

impl Default for StppmOptions {
    fn default() -> Self {
        Self { method: Method::Glm, nd: None, seed: 1, marked: None, ridge: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedInfo {
    pub mark: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub deviance: f64,
    pub score_norm: f64,
}

/// A fitted log-linear Poisson intensity model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPoissonModel {
    pub formula: String,
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub method: Method,
    /// Fitted intensity at each data event, in pattern order.
    pub fitted: Vec<f64>,
    pub quadrature: QuadratureMeta,
    pub convergence: Convergence,
    pub marked: Option<MarkedInfo>,
}

impl FittedPoissonModel {
    pub fn formula(&self) -> Formula {
        parse_formula(&self.formula).expect("stored formula parses")
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficient_names.iter().position(|n| n == name).map(|k| self.coefficients[k])
    }
}

/// Per-type indicator columns `{mark}{level}` for levels after the first.
pub(crate) fn type_columns(info: &MarkedInfo, pts: &DesignPoints) -> Result<Vec<(String, Vec<f64>)>> {
    let m = pts
        .marks
        .iter()
        .find(|m| m.name == info.mark)
        .ok_or_else(|| crate::Error::UnresolvedVariable(info.mark.clone()))?;
    let MarkValues::Categorical { levels, codes } = &m.values else {
        return Err(invalid(format!("mark `{}` must be categorical", info.mark)));
    };
    let mut out = Vec::new();
    for level in info.levels.iter().skip(1) {
        let code = levels.iter().position(|v| v == level);
        let col = codes.iter().map(|&c| if Some(c) == code { 1.0 } else { 0.0 }).collect();
        out.push((format!("{}{}", info.mark, level), col));
    }
    Ok(out)
}

pub(crate) fn full_design(
    formula: &Formula,
    pts: &DesignPoints,
    covs: &[CovariateGrid],
    marked: Option<&MarkedInfo>,
) -> Result<DesignMatrix> {
    let mut d = build_design(formula, pts, covs)?;
    if let Some(info) = marked {
        d.append_columns(type_columns(info, pts)?);
    }
    Ok(d)
}

/// Berman–Turner response and GLM setup for a quadrature.
pub(crate) struct Setup {
    pub design: DesignMatrix,
    pub response: Vec<f64>,
    pub weights: Vec<f64>,
    pub offset: Option<Vec<f64>>,
    pub family: Family,
}

pub(crate) fn setup(q: &Quadrature, design: DesignMatrix, method: Method) -> Setup {
    match method {
        Method::Glm => Setup {
            response: (0..q.len()).map(|k| if q.is_data[k] { 1.0 / q.weights[k] } else { 0.0 }).collect(),
            weights: q.weights.clone(),
            offset: None,
            family: Family::PoissonLog,
            design,
        },
        Method::Lsr => {
            let rho = q.meta.n_dummy as f64 / q.meta.volume;
            Setup {
                response: q.is_data.iter().map(|&d| if d { 1.0 } else { 0.0 }).collect(),
                weights: vec![1.0; q.len()],
                offset: Some(vec![-rho.ln(); q.len()]),
                family: Family::BinomialLogit,
                design,
            }
        }
    }
}

pub(crate) fn ridge_penalty(design: &DesignMatrix, info: Option<&MarkedInfo>, ridge: f64) -> Option<Vec<f64>> {
    let info = info?;
    if ridge <= 0.0 {
        return None;
    }
    let k = info.levels.len() - 1;
    let p = design.ncols;
    Some((0..p).map(|j| if j >= p - k { ridge } else { 0.0 }).collect())
}

/// Fits `log λ(x, y, t) = design · θ` to a pattern by cubature.
pub fn stppm(pattern: &PointPattern, formula: &Formula, covs: &[CovariateGrid], opts: &StppmOptions) -> Result<FittedPoissonModel> {
    let q = match &opts.marked {
        Some(mark) => make_marked_quadrature(pattern, mark, opts.nd, opts.seed)?,
        None => make_quadrature(pattern, opts.nd, opts.seed)?,
    };
    let marked = match &opts.marked {
        Some(mark) => match &pattern.mark(mark).expect("checked by quadrature").values {
            MarkValues::Categorical { levels, .. } => Some(MarkedInfo { mark: mark.clone(), levels: levels.clone() }),
            MarkValues::Continuous(_) => unreachable!("checked by quadrature"),
        },
        None => None,
    };
    let pts = q.points();
    let design = full_design(formula, &pts, covs, marked.as_ref())?;
    let penalty = ridge_penalty(&design, marked.as_ref(), opts.ridge);
    let s = setup(&q, design, opts.method);
    let glm = fit_glm(
        &s.design,
        &s.response,
        &s.weights,
        s.offset.as_deref(),
        s.family,
        &GlmOptions { penalty, ..Default::default() },
    )?;
    Ok(assemble(formula, &q, &s.design, glm, opts.method, marked))
}

fn assemble(
    formula: &Formula,
    q: &Quadrature,
    design: &DesignMatrix,
    glm: GlmFit,
    method: Method,
    marked: Option<MarkedInfo>,
) -> FittedPoissonModel {
    let fitted = q.data_rows().map(|k| design.linear_predictor(k, &glm.coefficients).exp()).collect();
    FittedPoissonModel {
        formula: formula.to_string(),
        coefficient_names: design.names.clone(),
        coefficients: glm.coefficients,
        std_errors: glm.std_errors,
        method,
        fitted,
        quadrature: q.meta.clone(),
        convergence: Convergence { iterations: glm.iterations, deviance: glm.deviance, score_norm: glm.score_norm },
        marked,
    }
}

/// `exp(design · θ̂)` at arbitrary points.
pub fn predict_intensity(model: &FittedPoissonModel, pts: &DesignPoints, covs: &[CovariateGrid]) -> Result<Vec<f64>> {
    let design = full_design(&model.formula(), pts, covs, model.marked.as_ref())?;
    if design.names != model.coefficient_names {
        return Err(invalid(format!(
            "design columns {:?} differ from the model's {:?} (categorical levels must match)",
            design.names, model.coefficient_names
        )));
    }
    Ok((0..design.nrows).map(|i| design.linear_predictor(i, &model.coefficients).exp()).collect())
}
