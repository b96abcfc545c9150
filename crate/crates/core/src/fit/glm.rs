use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::formula::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Poisson with log link.
    PoissonLog,
    /// Binomial with logit link; responses in {0, 1}.
    BinomialLogit,
}

#[derive(Debug, Clone)]
pub struct GlmOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Quadratic penalty `Σ penalty[j] β[j]²`, one entry per column.
    pub penalty: Option<Vec<f64>>,
    /// Starting coefficients; otherwise the mean response.
    pub start: Option<Vec<f64>>,
}

impl Default for GlmOptions {
    fn default() -> Self {
        Self { tol: 1e-8, maxit: 50, penalty: None, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    /// From the inverse information matrix at the solution.
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub deviance: f64,
    /// Max-norm of the (penalised) weighted score at the solution.
    pub score_norm: f64,
}

const ETA_LIMIT: f64 = 30.0;
const MAX_HALVINGS: usize = 30;

struct Problem<'a> {
    x: &'a DesignMatrix,
    y: &'a [f64],
    w: &'a [f64],
    offset: Option<&'a [f64]>,
    family: Family,
    penalty: Vec<f64>,
}

impl Problem<'_> {
    fn eta(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.x.nrows)
            .map(|i| self.x.linear_predictor(i, beta) + self.offset.map_or(0.0, |o| o[i]))
            .collect()
    }

    fn mu(&self, eta: f64) -> f64 {
        match self.family {
            Family::PoissonLog => eta.exp(),
            Family::BinomialLogit => 1.0 / (1.0 + (-eta).exp()),
        }
    }

    fn link(&self, mu: f64) -> f64 {
        match self.family {
            Family::PoissonLog => mu.ln(),
            Family::BinomialLogit => (mu / (1.0 - mu)).ln(),
        }
    }

    /// d mu / d eta, which for canonical links is also the variance.
    fn variance(&self, mu: f64) -> f64 {
        match self.family {
            Family::PoissonLog => mu,
            Family::BinomialLogit => mu * (1.0 - mu),
        }
    }

    fn deviance(&self, mu: &[f64], beta: Option<&[f64]>) -> f64 {
        let mut dev = 0.0;
        for k in 0..mu.len() {
            let (y, m, w) = (self.y[k], mu[k], self.w[k]);
            if w == 0.0 {
                continue;
            }
            dev += match self.family {
                Family::PoissonLog => {
                    let ylog = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
                    2.0 * w * (ylog - (y - m))
                }
                Family::BinomialLogit => {
                    let a = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
                    let b = if y < 1.0 { (1.0 - y) * ((1.0 - y) / (1.0 - m)).ln() } else { 0.0 };
                    2.0 * w * (a + b)
                }
            };
        }
        if let Some(beta) = beta {
            dev += self.penalty.iter().zip(beta).map(|(p, b)| p * b * b).sum::<f64>();
        }
        dev
    }

    fn diverged(&self, eta: &[f64]) -> bool {
        eta.iter().any(|e| !e.is_finite())
            || (self.family == Family::BinomialLogit && eta.iter().any(|e| e.abs() > ETA_LIMIT))
    }

    /// Weighted least squares `min Σ W (z − Xβ)² + Σ pen β²` by Householder QR.
    fn wls(&self, z: &[f64], wt: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (n, p) = (self.x.nrows, self.x.ncols);
        let extra = self.penalty.iter().filter(|&&v| v > 0.0).count();
        let mut a = DMatrix::<f64>::zeros(n + extra, p);
        let mut b = DVector::<f64>::zeros(n + extra);
        for i in 0..n {
            let s = wt[i].sqrt();
            let row = self.x.row(i);
            for j in 0..p {
                a[(i, j)] = s * row[j];
            }
            b[i] = s * z[i];
        }
        let mut r = n;
        for (j, &pen) in self.penalty.iter().enumerate() {
            if pen > 0.0 {
                a[(r, j)] = pen.sqrt();
                r += 1;
            }
        }
        let qr = a.qr();
        let rmat = qr.r();
        let qtb = qr.q().transpose() * b;
        let beta = rmat
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| Error::RankDeficient(self.x.names.clone()))?;
        Ok((beta.iter().copied().collect(), rmat))
    }
}

/// Columns whose weighted values are (numerically) a linear combination of
/// earlier columns, found by sequential Gram–Schmidt.
pub fn aliased_columns(x: &DesignMatrix, w: &[f64], penalty: &[f64]) -> Vec<String> {
    let n = x.nrows;
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..x.ncols {
        // Penalised columns are identifiable through their penalty row.
        let mut v: Vec<f64> = (0..n).map(|i| sw[i] * x.values[i * x.ncols + j]).collect();
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if penalty.get(j).copied().unwrap_or(0.0) > 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= 1e-7 * norm0 {
            out.push(x.names[j].clone());
        } else {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    out
}

/// Iteratively reweighted least squares for a weighted GLM.
///
/// Maximises `Σ w_k ℓ(y_k; μ_k)` (minus the optional ridge penalty) with
/// step-halving whenever the deviance increases. Converges when the relative
/// deviance change drops below `tol`.
pub fn fit_glm(
    x: &DesignMatrix,
    y: &[f64],
    w: &[f64],
    offset: Option<&[f64]>,
    family: Family,
    opts: &GlmOptions,
) -> Result<GlmFit> {
    let (n, p) = (x.nrows, x.ncols);
    if y.len() != n || w.len() != n || offset.is_some_and(|o| o.len() != n) {
        return Err(invalid("response, weights and offset must match the design rows"));
    }
    if p == 0 {
        return Err(invalid("design matrix has no columns"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !w.iter().any(|&v| v > 0.0) {
        return Err(invalid("weights must be finite, nonnegative and not all zero"));
    }
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("responses must be finite and nonnegative"));
    }
    if family == Family::BinomialLogit && y.iter().any(|&v| v > 1.0) {
        return Err(invalid("binomial responses must lie in [0, 1]"));
    }
    let penalty = opts.penalty.clone().unwrap_or_else(|| vec![0.0; p]);
    if penalty.len() != p || penalty.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("penalty must have one nonnegative entry per column"));
    }
    let aliased = aliased_columns(x, w, &penalty);
    if !aliased.is_empty() {
        return Err(Error::RankDeficient(aliased));
    }
    let prob = Problem { x, y, w, offset, family, penalty };

    let sw: f64 = w.iter().sum();
    let ybar = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut beta, mut eta, mut mu): (Option<Vec<f64>>, Vec<f64>, Vec<f64>) = match &opts.start {
        Some(s) => {
            if s.len() != p {
                return Err(invalid("start vector length differs from the number of columns"));
            }
            let eta = prob.eta(s);
            let mu = eta.iter().map(|&e| prob.mu(e)).collect();
            (Some(s.clone()), eta, mu)
        }
        None => {
            let mu: Vec<f64> = match family {
                Family::PoissonLog => {
                    if ybar <= 0.0 {
                        return Err(invalid("all responses are zero"));
                    }
                    vec![ybar; n]
                }
                Family::BinomialLogit => (0..n).map(|k| (w[k] * y[k] + 0.5) / (w[k] + 1.0)).collect(),
            };
            let eta = mu.iter().map(|&m| prob.link(m)).collect();
            (None, eta, mu)
        }
    };
    let mut dev_old = prob.deviance(&mu, beta.as_deref());
    let mut iterations = 0;
    let mut converged = false;
    let mut rmat = DMatrix::zeros(0, 0);

    while iterations < opts.maxit {
        iterations += 1;
        let mut z = vec![0.0; n];
        let mut wt = vec![0.0; n];
        for k in 0..n {
            let v = prob.variance(mu[k]);
            let off = offset.map_or(0.0, |o| o[k]);
            wt[k] = w[k] * v;
            z[k] = eta[k] - off + (y[k] - mu[k]) / v;
        }
        let (mut cand, r) = prob.wls(&z, &wt)?;
        rmat = r;
        let mut eta_new = prob.eta(&cand);
        let mut mu_new: Vec<f64> = eta_new.iter().map(|&e| prob.mu(e)).collect();
        let mut dev = prob.deviance(&mu_new, Some(&cand));
        if family == Family::BinomialLogit && eta_new.iter().any(|e| e.abs() > ETA_LIMIT) {
            return Err(Error::Divergence("fitted probabilities numerically 0 or 1 (separation)".into()));
        }
        let mut halvings = 0;
        while !dev.is_finite() || prob.diverged(&eta_new) || dev > dev_old + 1e-12 * dev_old.abs() {
            let Some(old) = &beta else {
                if !dev.is_finite() || prob.diverged(&eta_new) {
                    return Err(Error::Divergence("non-finite linear predictor on the first step".into()));
                }
                break;
            };
            halvings += 1;
            if halvings > MAX_HALVINGS {
                if prob.diverged(&eta_new) || !dev.is_finite() {
                    return Err(Error::Divergence(
                        "fitted values are numerically 0 or 1 (separation) or overflow".into(),
                    ));
                }
                // Deviance cannot be decreased further: at the optimum to rounding.
                cand = old.clone();
                eta_new = prob.eta(&cand);
                mu_new = eta_new.iter().map(|&e| prob.mu(e)).collect();
                dev = dev_old;
                break;
            }
            for (c, o) in cand.iter_mut().zip(old) {
                *c = 0.5 * (*c + o);
            }
            eta_new = prob.eta(&cand);
            mu_new = eta_new.iter().map(|&e| prob.mu(e)).collect();
            dev = prob.deviance(&mu_new, Some(&cand));
        }
        let change = (dev - dev_old).abs() / (dev.abs() + 0.1);
        beta = Some(cand);
        eta = eta_new;
        mu = mu_new;
        if change < opts.tol && iterations > 1 {
            dev_old = dev;
            converged = true;
            break;
        }
        dev_old = dev;
    }
    if !converged {
        return Err(Error::MaxIterations(opts.maxit));
    }
    let beta = beta.expect("at least one iteration");
    if prob.diverged(&eta) {
        return Err(Error::Divergence("fitted values are numerically 0 or 1 (separation)".into()));
    }

    let mut score = vec![0.0; p];
    for k in 0..n {
        let row = x.row(k);
        let r = w[k] * (y[k] - mu[k]);
        for j in 0..p {
            score[j] += r * row[j];
        }
    }
    for j in 0..p {
        score[j] -= prob.penalty[j] * beta[j];
    }
    let score_norm = score.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let std_errors = std_errors(&rmat);
    Ok(GlmFit { coefficients: beta, std_errors, iterations, deviance: dev_old, score_norm })
}

fn std_errors(r: &DMatrix<f64>) -> Vec<f64> {
    let p = r.ncols();
    let rp = r.rows(0, p).into_owned();
    match rp.try_inverse() {
        Some(inv) => (0..p).map(|j| inv.row(j).iter().map(|v| v * v).sum::<f64>().sqrt()).collect(),
        None => vec![f64::NAN; p],
    }
}
