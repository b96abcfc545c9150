use std::fmt;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contrast::{min_contrast, ContrastFit, ContrastOptions};
use super::covariance::{CovFamily, CovParams};
use crate::covariates::CovariateGrid;
use crate::error::{invalid, Result};
use crate::fit::{locstppm, stppm, LocalOptions, StppmOptions};
use crate::formula::Formula;
use crate::geometry::PointPattern;
use crate::rng;
use crate::summaries::{second_order_global, second_order_local, Statistic, SummaryConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Global,
    Local,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Global => "global",
            Order::Local => "local",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LgcpOptions {
    pub first: Order,
    pub second: Order,
    pub family: CovFamily,
    pub seed: u64,
    /// pcf grid; `SummaryConfig::default_for` when absent.
    pub summary: Option<SummaryConfig>,
    pub nd: Option<[usize; 3]>,
    /// Bandwidths of a local first-order fit.
    pub h_s: Option<f64>,
    pub h_t: Option<f64>,
}

impl Default for LgcpOptions {
    fn default() -> Self {
        Self {
            first: Order::Global,
            second: Order::Global,
            family: CovFamily::SepExp,
            seed: 1,
            summary: None,
            nd: None,
            h_s: None,
            h_t: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FirstOrderFit {
    Global { coefficients: Vec<f64> },
    /// One row per event.
    Local { coefficients: Vec<Vec<f64>>, h_s: f64, h_t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SecondOrderFit {
    Global(ContrastFit),
    /// One row per event; `None` where the optimiser failed.
    Local { fits: Vec<Option<ContrastFit>>, failures: Vec<Option<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgcpFit {
    pub formula: String,
    pub first: Order,
    pub second: Order,
    pub family: CovFamily,
    pub coefficient_names: Vec<String>,
    pub first_order: FirstOrderFit,
    pub second_order: SecondOrderFit,
    /// First-order intensity at each event.
    pub fitted: Vec<f64>,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl LgcpFit {
    /// Covariance parameters per event (global fits repeat the single row).
    pub fn params_per_event(&self) -> Vec<Option<CovParams>> {
        match &self.second_order {
            SecondOrderFit::Global(c) => vec![Some(c.params); self.fitted.len()],
            SecondOrderFit::Local { fits, .. } => fits.iter().map(|f| f.as_ref().map(|c| c.params)).collect(),
        }
    }

    pub fn global_params(&self) -> Option<CovParams> {
        match &self.second_order {
            SecondOrderFit::Global(c) => Some(c.params),
            SecondOrderFit::Local { .. } => None,
        }
    }
}

/// Fits a spatio-temporal LGCP: first-order intensity by cubature (global or
/// local), then covariance parameters by minimum contrast on the global pcf
/// or on each event's local pcf.
pub fn stlgcppm(pattern: &PointPattern, formula: &Formula, covs: &[CovariateGrid], opts: &LgcpOptions) -> Result<LgcpFit> {
    let start = Instant::now();
    if pattern.len() < 10 {
        return Err(invalid(format!("LGCP fitting needs at least 10 events, got {}", pattern.len())));
    }
    if opts.second == Order::Local && pattern.len() < 20 {
        log::warn!("local second-order fits on {} events are unstable; 20 or more are advisable", pattern.len());
    }
    let (names, first_order, fitted) = match opts.first {
        Order::Global => {
            let m = stppm(pattern, formula, covs, &StppmOptions { nd: opts.nd, seed: opts.seed, ..Default::default() })?;
            (m.coefficient_names, FirstOrderFit::Global { coefficients: m.coefficients }, m.fitted)
        }
        Order::Local => {
            let lo = LocalOptions { h_s: opts.h_s, h_t: opts.h_t, nd: opts.nd, seed: opts.seed };
            let m = locstppm(pattern, formula, covs, &lo)?;
            let global = stppm(pattern, formula, covs, &StppmOptions { nd: opts.nd, seed: opts.seed, ..Default::default() })?;
            // Events whose local fit failed fall back to the global intensity.
            let fitted = m.fitted.iter().zip(&global.fitted).map(|(l, g)| if l.is_finite() { *l } else { *g }).collect();
            (m.coefficient_names, FirstOrderFit::Local { coefficients: m.coefficients, h_s: m.h_s, h_t: m.h_t }, fitted)
        }
    };
    let cfg = match &opts.summary {
        Some(c) => {
            if c.statistic != Statistic::G {
                return Err(invalid("minimum contrast needs a pair correlation (g) configuration"));
            }
            c.clone()
        }
        None => SummaryConfig::default_for(pattern, Statistic::G),
    };
    let copts = ContrastOptions { seed: opts.seed, ..Default::default() };
    let second_order = match opts.second {
        Order::Global => {
            let s = second_order_global(pattern, &fitted, &cfg)?;
            SecondOrderFit::Global(min_contrast(&s, opts.family, &copts)?)
        }
        Order::Local => {
            let set = second_order_local(pattern, &fitted, &cfg, None)?;
            let rows: Vec<std::result::Result<ContrastFit, String>> = set
                .surfaces
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut sub = rng::substream(opts.seed, i as u64);
                    let o = ContrastOptions { seed: sub.gen(), ..copts.clone() };
                    min_contrast(s, opts.family, &o).map_err(|e| e.to_string())
                })
                .collect();
            let mut fits = Vec::with_capacity(rows.len());
            let mut failures = Vec::with_capacity(rows.len());
            for (i, r) in rows.into_iter().enumerate() {
                match r {
                    Ok(c) => {
                        fits.push(Some(c));
                        failures.push(None);
                    }
                    Err(e) => {
                        log::warn!("local minimum contrast at event {} failed: {e}", i + 1);
                        fits.push(None);
                        failures.push(Some(e));
                    }
                }
            }
            SecondOrderFit::Local { fits, failures }
        }
    };
    Ok(LgcpFit {
        formula: formula.to_string(),
        first: opts.first,
        second: opts.second,
        family: opts.family,
        coefficient_names: names,
        first_order,
        second_order,
        fitted,
        r: cfg.r.clone(),
        h: cfg.h.clone(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Min, quartiles (type 7), mean and max of the finite entries.
pub fn six_number_summary(v: &[f64]) -> [f64; 6] {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return [f64::NAN; 6];
    }
    s.sort_by(f64::total_cmp);
    let q = |p: f64| crate::diagnostics::quantile_sorted(&s, p);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    [s[0], q(0.25), q(0.5), mean, q(0.75), s[s.len() - 1]]
}

fn write_table(f: &mut fmt::Formatter<'_>, names: &[String], columns: &[Vec<f64>]) -> fmt::Result {
    const LABELS: [&str; 6] = ["Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."];
    let sums: Vec<[f64; 6]> = columns.iter().map(|c| six_number_summary(c)).collect();
    for n in names {
        write!(f, "{n:>22}")?;
    }
    writeln!(f)?;
    for (k, label) in LABELS.iter().enumerate() {
        for s in &sums {
            write!(f, "{:>22}", format!("{label:<8}: {:.4}", s[k]))?;
        }
        writeln!(f)?;
    }
    Ok(())
}

const RULE: &str = "--------------------------------------------------";

impl fmt::Display for LgcpFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Minimum contrast fit")?;
        writeln!(f, "for a log-Gaussian Cox process with")?;
        writeln!(f, "{} first-order intensity and", self.first)?;
        writeln!(f, "{} second-order intensity", self.second)?;
        writeln!(f, "{RULE}")?;
        match &self.first_order {
            FirstOrderFit::Global { coefficients } => {
                if self.coefficient_names == ["(Intercept)"] {
                    writeln!(f, "Homogeneous Poisson process")?;
                    writeln!(f, "with Intensity: {:.5}", coefficients[0].exp())?;
                } else {
                    writeln!(f, "Inhomogeneous Poisson process: {}", self.formula)?;
                }
                writeln!(f)?;
                writeln!(f, "Estimated coefficients of the first-order intensity:")?;
                for n in &self.coefficient_names {
                    write!(f, "{n:>14}")?;
                }
                writeln!(f)?;
                for c in coefficients {
                    write!(f, "{c:>14.3}")?;
                }
                writeln!(f)?;
            }
            FirstOrderFit::Local { coefficients, .. } => {
                writeln!(f, "Local Poisson process: {}", self.formula)?;
                writeln!(f)?;
                writeln!(f, "Summary of estimated coefficients of the first-order intensity")?;
                let cols: Vec<Vec<f64>> =
                    (0..self.coefficient_names.len()).map(|j| coefficients.iter().map(|r| r[j]).collect()).collect();
                write_table(f, &self.coefficient_names, &cols)?;
            }
        }
        writeln!(f, "{RULE}")?;
        writeln!(f, "Covariance function: {}", self.family.name())?;
        writeln!(f)?;
        let names = ["sigma".to_string(), "alpha".to_string(), "beta".to_string()];
        match &self.second_order {
            SecondOrderFit::Global(c) => {
                writeln!(f, "Estimated coefficients of the second-order intensity:")?;
                writeln!(f, "{:>10}{:>10}{:>10}", "sigma", "alpha", "beta")?;
                writeln!(f, "{:>10.3}{:>10.3}{:>10.3}", c.params.sigma, c.params.alpha, c.params.beta)?;
            }
            SecondOrderFit::Local { fits, .. } => {
                writeln!(f, "Summary of estimated coefficients of the second-order intensity")?;
                let col = |k: usize| -> Vec<f64> {
                    fits.iter().map(|c| c.as_ref().map_or(f64::NAN, |c| c.params.as_array()[k])).collect()
                };
                write_table(f, &names, &[col(0), col(1), col(2)])?;
            }
        }
        writeln!(f, "{RULE}")?;
        if self.elapsed_seconds.is_finite() {
            writeln!(f, "Model fitted in {:.3} minutes", self.elapsed_seconds / 60.0)?;
        }
        Ok(())
    }
}
