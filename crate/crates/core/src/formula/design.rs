use std::collections::HashMap;

use super::{Factor, Formula};
use crate::covariates::CovariateGrid;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Mark, MarkValues, PointPattern};

/// Rows to evaluate a formula on: coordinates plus aligned mark columns.
#[derive(Debug, Clone, Default)]
pub struct DesignPoints {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub marks: Vec<Mark>,
}

impl DesignPoints {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn from_pattern(p: &PointPattern) -> Self {
        Self {
            x: p.events().iter().map(|e| e.x).collect(),
            y: p.events().iter().map(|e| e.y).collect(),
            t: p.events().iter().map(|e| e.t).collect(),
            marks: p.marks().to_vec(),
        }
    }

    fn mark(&self, name: &str) -> Option<&MarkValues> {
        self.marks.iter().find(|m| m.name == name).map(|m| &m.values)
    }
}

/// Dense design matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub nrows: usize,
    pub ncols: usize,
    pub values: Vec<f64>,
}

impl DesignMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.values[i * self.ncols + j]).collect()
    }

    /// `Σ_j row_i[j] * coef[j]`, summed left to right.
    pub fn linear_predictor(&self, i: usize, coef: &[f64]) -> f64 {
        self.row(i).iter().zip(coef).fold(0.0, |acc, (a, b)| acc + a * b)
    }

    /// Appends columns (each of length `nrows`) to the right.
    pub fn append_columns(&mut self, cols: Vec<(String, Vec<f64>)>) {
        if cols.is_empty() {
            return;
        }
        let extra = cols.len();
        let mut values = Vec::with_capacity(self.nrows * (self.ncols + extra));
        for i in 0..self.nrows {
            values.extend_from_slice(self.row(i));
            values.extend(cols.iter().map(|(_, c)| c[i]));
        }
        self.values = values;
        self.ncols += extra;
        self.names.extend(cols.into_iter().map(|(n, _)| n));
    }

    fn from_columns(nrows: usize, cols: Vec<(String, Vec<f64>)>) -> Self {
        let ncols = cols.len();
        let mut values = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            values.extend(cols.iter().map(|(_, c)| c[i]));
        }
        Self { names: cols.into_iter().map(|(n, _)| n).collect(), nrows, ncols, values }
    }
}

enum Resolved<'a> {
    Numeric(Vec<f64>),
    Categorical { levels: &'a [String], codes: &'a [usize] },
}

fn resolve<'a>(
    name: &str,
    pts: &'a DesignPoints,
    covs: &HashMap<&str, &CovariateGrid>,
) -> Result<Resolved<'a>> {
    match name {
        "x" => return Ok(Resolved::Numeric(pts.x.clone())),
        "y" => return Ok(Resolved::Numeric(pts.y.clone())),
        "t" => return Ok(Resolved::Numeric(pts.t.clone())),
        _ => {}
    }
    if let Some(g) = covs.get(name) {
        let vals = (0..pts.len()).map(|i| g.lookup_nearest(pts.x[i], pts.y[i], pts.t[i])).collect();
        return Ok(Resolved::Numeric(vals));
    }
    match pts.mark(name) {
        Some(MarkValues::Continuous(v)) => Ok(Resolved::Numeric(v.clone())),
        Some(MarkValues::Categorical { levels, codes }) => Ok(Resolved::Categorical { levels, codes }),
        None => Err(Error::UnresolvedVariable(name.to_string())),
    }
}

fn factor_columns(
    factor: &Factor,
    pts: &DesignPoints,
    covs: &HashMap<&str, &CovariateGrid>,
) -> Result<Vec<(String, Vec<f64>)>> {
    match factor {
        Factor::Var(name) => match resolve(name, pts, covs)? {
            Resolved::Numeric(v) => Ok(vec![(name.clone(), v)]),
            Resolved::Categorical { levels, codes } => Ok(levels
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, level)| {
                    let col = codes.iter().map(|&c| if c == l { 1.0 } else { 0.0 }).collect();
                    (format!("{name}{level}"), col)
                })
                .collect()),
        },
        Factor::Monomial(parts) => {
            let mut col = vec![1.0; pts.len()];
            for (name, power) in parts {
                match resolve(name, pts, covs)? {
                    Resolved::Numeric(v) => {
                        for (c, x) in col.iter_mut().zip(&v) {
                            *c *= x.powi(*power as i32);
                        }
                    }
                    Resolved::Categorical { .. } => {
                        return Err(invalid(format!("categorical variable `{name}` inside I()")))
                    }
                }
            }
            Ok(vec![(factor.to_string(), col)])
        }
    }
}

/// Evaluates a formula on a set of points.
///
/// Columns: `(Intercept)` (unless removed), then each term in formula order.
/// Categorical variables use treatment coding against their first level;
/// interactions multiply elementwise.
pub fn build_design(formula: &Formula, pts: &DesignPoints, covs: &[CovariateGrid]) -> Result<DesignMatrix> {
    let n = pts.len();
    if pts.y.len() != n || pts.t.len() != n || pts.marks.iter().any(|m| m.values.len() != n) {
        return Err(invalid("design point columns differ in length"));
    }
    let covs: HashMap<&str, &CovariateGrid> = covs.iter().map(|g| (g.name.as_str(), g)).collect();
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    if formula.intercept {
        cols.push(("(Intercept)".into(), vec![1.0; n]));
    }
    for term in &formula.terms {
        let mut acc: Vec<(String, Vec<f64>)> = vec![(String::new(), vec![1.0; n])];
        for factor in &term.factors {
            let fcols = factor_columns(factor, pts, &covs)?;
            let mut next = Vec::with_capacity(acc.len() * fcols.len());
            for (an, av) in &acc {
                for (fname, fv) in &fcols {
                    let name = if an.is_empty() { fname.clone() } else { format!("{an}:{fname}") };
                    let v = av.iter().zip(fv).map(|(a, b)| a * b).collect();
                    next.push((name, v));
                }
            }
            acc = next;
        }
        cols.extend(acc);
    }
    if cols.iter().flat_map(|(_, c)| c.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("design matrix has non-finite entries"));
    }
    Ok(DesignMatrix::from_columns(n, cols))
}
