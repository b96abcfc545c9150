use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::covariance::{cov_unchecked, CovFamily, CovParams};
use super::optim::NelderMead;
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::summaries::SummarySurface;

/// Log-parameters are confined to `[-LOG_BOUND, LOG_BOUND]`.
const LOG_BOUND: f64 = 25.0;

#[derive(Debug, Clone)]
pub struct ContrastOptions {
    /// Exponent applied to both the empirical and the model pcf.
    pub q: f64,
    /// One weight per grid node (r-major); unit weights when absent.
    pub weights: Option<Vec<f64>>,
    /// Starting point; σ = 1 and the grid medians when absent.
    pub init: Option<CovParams>,
    pub xtol: f64,
    /// Number of starts: the initial point plus jittered copies.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ContrastOptions {
    fn default() -> Self {
        Self { q: 0.5, weights: None, init: None, xtol: 1e-8, restarts: 3, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastFit {
    pub params: CovParams,
    /// Objective value at the minimum.
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Set when the solution sits at a parameter limit (e.g. σ → 0).
    pub boundary: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Minimum contrast fit of `g(r, h; ψ) = exp(C(r, h; ψ))` to an empirical
/// pair correlation surface, minimising `Σ w (ĝ^q − g^q)²` over
/// `(log σ, log α, log β)`.
pub fn min_contrast(surface: &SummarySurface, family: CovFamily, opts: &ContrastOptions) -> Result<ContrastFit> {
    family.validate()?;
    let (r, h, est) = (&surface.r, &surface.h, &surface.estimate);
    let nodes = r.len() * h.len();
    if nodes == 0 || est.len() != nodes {
        return Err(invalid("surface grid is empty or inconsistent"));
    }
    if let Some(v) = est.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(invalid(format!("empirical pcf must be finite and nonnegative, found {v}")));
    }
    if r.iter().chain(h.iter()).any(|v| *v < 0.0) {
        return Err(Error::NegativeLag(r.iter().chain(h.iter()).copied().fold(f64::INFINITY, f64::min)));
    }
    let weights = match &opts.weights {
        Some(w) if w.len() != nodes => return Err(invalid(format!("{} weights for {nodes} grid nodes", w.len()))),
        Some(w) if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            return Err(invalid("contrast weights must be finite and nonnegative"))
        }
        Some(w) => w.clone(),
        None => vec![1.0; nodes],
    };
    if !(opts.q > 0.0) {
        return Err(invalid("contrast exponent q must be positive"));
    }
    let q = opts.q;
    let target: Vec<f64> = est.iter().map(|g| g.powf(q)).collect();
    let nh = h.len();
    let objective = |theta: &[f64]| -> f64 {
        if theta.iter().any(|t| t.abs() > LOG_BOUND) {
            return f64::INFINITY;
        }
        let p = [theta[0].exp(), theta[1].exp(), theta[2].exp()];
        let mut m = 0.0;
        for k in 0..nodes {
            let c = cov_unchecked(family, &p, r[k / nh], h[k % nh]);
            let d = target[k] - (q * c).exp();
            m += weights[k] * d * d;
        }
        m
    };

    let init = match opts.init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => CovParams { sigma: 1.0, alpha: median(r).max(f64::MIN_POSITIVE), beta: median(h).max(f64::MIN_POSITIVE) },
    };
    let x0 = [init.sigma.ln(), init.alpha.ln(), init.beta.ln()];
    let nm = NelderMead { xtol: opts.xtol, ..Default::default() };
    let mut rng = rng::stream(opts.seed);
    let jitter = Normal::new(0.0, 0.5).expect("valid sd");
    let mut best: Option<super::optim::Minimum> = None;
    let mut evaluations = 0;
    for k in 0..opts.restarts.max(1) {
        let start: Vec<f64> = if k == 0 { x0.to_vec() } else { x0.iter().map(|v| v + jitter.sample(&mut rng)).collect() };
        let m = nm.minimize(&objective, &start);
        evaluations += m.evals;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    // Restart once from the best point to shake off a collapsed simplex.
    let b = best.expect("at least one start");
    let polish = nm.minimize(&objective, &b.x);
    evaluations += polish.evals;
    let best = if polish.value <= b.value { polish } else { b };
    if !best.value.is_finite() {
        return Err(Error::Stagnation(format!("no finite contrast value found for {}", family.name())));
    }
    let p = CovParams { sigma: best.x[0].exp(), alpha: best.x[1].exp(), beta: best.x[2].exp() };
    let boundary = p.sigma * p.sigma < 1e-6 || best.x.iter().any(|t| t.abs() > LOG_BOUND - 1.0);
    if !best.converged {
        log::warn!("minimum contrast stopped after {evaluations} evaluations without meeting the tolerance");
    }
    Ok(ContrastFit { params: p, value: best.value, evaluations, converged: best.converged, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgcp::CovarianceModel;
    use crate::summaries::Statistic;
    use rand::Rng as _;

    pub(crate) fn analytic_surface(model: &CovarianceModel, r: &[f64], h: &[f64]) -> SummarySurface {
        let mut est = Vec::new();
        for &rv in r {
            for &hv in h {
                est.push(model.pcf(rv, hv).unwrap());
            }
        }
        SummarySurface {
            r: r.to_vec(),
            h: h.to_vec(),
            theoretical: SummarySurface::theoretical_surface(r, h, Statistic::G, false),
            estimate: est,
            skipped_pairs: 0,
        }
    }

    fn grid() -> (Vec<f64>, Vec<f64>) {
        ((1..=10).map(|k| 0.03 * k as f64).collect(), (1..=10).map(|k| 0.04 * k as f64).collect())
    }

    #[test]
    fn noiseless_recovery_all_families() {
        let (r, h) = grid();
        let mut rng = rng::stream(11);
        for family in [CovFamily::SepExp, CovFamily::gneiting(), CovFamily::iaco_cesare()] {
            for _ in 0..2 {
                let truth = CovParams::new(
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(0.05..0.3),
                    rng.gen_range(0.05..0.4),
                )
                .unwrap();
                let s = analytic_surface(&CovarianceModel::new(family, truth).unwrap(), &r, &h);
                let fit = min_contrast(&s, family, &ContrastOptions::default()).unwrap();
                for (a, b) in fit.params.as_array().iter().zip(truth.as_array()) {
                    assert!((a - b).abs() < 1e-3 * b, "{family:?}: {:?} vs {truth:?}", fit.params);
                }
            }
        }
    }

    #[test]
    fn flat_pcf_hits_boundary() {
        let (r, h) = grid();
        let mut s = analytic_surface(
            &CovarianceModel::new(CovFamily::SepExp, CovParams::new(1.0, 0.1, 0.1).unwrap()).unwrap(),
            &r,
            &h,
        );
        s.estimate.iter_mut().for_each(|v| *v = 1.0);
        let fit = min_contrast(&s, CovFamily::SepExp, &ContrastOptions::default()).unwrap();
        assert!(fit.boundary, "{fit:?}");
        assert!(fit.params.sigma < 1e-3);
    }

    #[test]
    fn uniform_weight_scaling_keeps_argmin() {
        let (r, h) = grid();
        let model = CovarianceModel::new(CovFamily::SepExp, CovParams::new(1.1, 0.12, 0.2).unwrap()).unwrap();
        let mut s = analytic_surface(&model, &r, &h);
        // Perturb so the minimum value is not zero.
        for (k, v) in s.estimate.iter_mut().enumerate() {
            *v *= 1.0 + 0.05 * ((k * 7 % 11) as f64 / 11.0 - 0.5);
        }
        let a = min_contrast(&s, CovFamily::SepExp, &ContrastOptions::default()).unwrap();
        let opts = ContrastOptions { weights: Some(vec![2.0; 100]), ..Default::default() };
        let b = min_contrast(&s, CovFamily::SepExp, &opts).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn rejects_negative_estimate() {
        let (r, h) = grid();
        let model = CovarianceModel::new(CovFamily::SepExp, CovParams::new(1.0, 0.1, 0.1).unwrap()).unwrap();
        let mut s = analytic_surface(&model, &r, &h);
        s.estimate[3] = -0.1;
        assert!(min_contrast(&s, CovFamily::SepExp, &ContrastOptions::default()).is_err());
    }
}
