//! Local permutation test and K-function based goodness-of-fit diagnostics.

use std::fmt;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Event, PointPattern};
use crate::rng;
use crate::summaries::{second_order_global, second_order_local, ListaSet, Statistic, SummaryConfig, SummarySurface};

/// Type-7 quantile of sorted data: linear interpolation between order
/// statistics at position `(n − 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// How the reference patterns of the local test are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullScheme {
    /// `n_X − 1` events drawn from `(X \ {xᵢ}) ∪ Z`; the observed surface is
    /// ranked among the k draws with a symmetric statistic.
    Relabel,
    /// `min(n_X − 1, |Z|)` events drawn from `Z` only.
    Subsample,
}

#[derive(Debug, Clone)]
pub struct LocalTestOptions {
    pub method: Statistic,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    pub scheme: NullScheme,
    /// LISTA grid; `SummaryConfig::default_for(X)` when absent.
    pub summary: Option<SummaryConfig>,
}

impl Default for LocalTestOptions {
    fn default() -> Self {
        Self { method: Statistic::K, k: 99, alpha: 0.05, seed: 1, scheme: NullScheme::Relabel, summary: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTestResult {
    pub p_values: Vec<f64>,
    /// 1-based ids with `p ≤ α`.
    pub significant: Vec<usize>,
    pub k: usize,
    pub alpha: f64,
    pub method: Statistic,
    pub scheme: NullScheme,
    pub n_x: usize,
    pub n_z: usize,
    pub warning: Option<String>,
}

impl fmt::Display for LocalTestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Test for local structure differences")?;
        writeln!(f)?;
        writeln!(f, "Background pattern X: {}", self.n_x)?;
        writeln!(f, "Alternative pattern Z: {}", self.n_z)?;
        writeln!(f)?;
        write!(f, "{} significant points at alpha = {}", self.significant.len(), self.alpha)
    }
}

fn concat(a: &PointPattern, b: &PointPattern) -> Result<PointPattern> {
    match (a.network(), a.network_coords(), b.network_coords()) {
        (Some(net), Some(ca), Some(cb)) => {
            let coords = ca.iter().chain(cb).copied().collect();
            let times = a.events().iter().chain(b.events()).map(|e| e.t).collect();
            PointPattern::on_network(net.clone(), coords, times, *a.interval())
        }
        _ => {
            let events: Vec<Event> = a.events().iter().chain(b.events()).copied().collect();
            PointPattern::new(events, *a.window(), *a.interval())
        }
    }
}

fn lista_of_first(p: &PointPattern, cfg: &SummaryConfig) -> Result<Vec<f64>> {
    let lam = vec![p.len() as f64 / p.volume(); p.len()];
    let set = second_order_local(p, &lam, cfg, Some(&[1]))?;
    Ok(set.surfaces.into_iter().next().expect("one id requested").estimate)
}

fn sq_dist_to_mean(s: &[f64], others: &[&Vec<f64>]) -> f64 {
    let m = others.len() as f64;
    (0..s.len())
        .map(|g| {
            let mean = others.iter().map(|o| o[g]).sum::<f64>() / m;
            (s[g] - mean).powi(2)
        })
        .sum()
}

/// Permutation test of whether the local second-order structure of each
/// event of `x` differs from that of the alternative pattern `z`.
pub fn localtest(x: &PointPattern, z: &PointPattern, opts: &LocalTestOptions) -> Result<LocalTestResult> {
    if !x.same_domain(z) {
        return Err(Error::DomainMismatch("X and Z must share window, interval and network".into()));
    }
    if x.is_empty() {
        return Err(Error::Empty("background pattern has no events".into()));
    }
    if z.len() < 2 {
        return Err(invalid("alternative pattern needs at least 2 events"));
    }
    if opts.k == 0 {
        return Err(invalid("at least one permutation is required"));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let warning = (1.0 / (opts.k as f64 + 1.0) > opts.alpha).then(|| {
        format!(
            "smallest attainable p-value 1/(k+1) = {:.4} exceeds alpha = {}; no point can be significant",
            1.0 / (opts.k as f64 + 1.0),
            opts.alpha
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let cfg = opts.summary.clone().unwrap_or_else(|| SummaryConfig::default_for(x, opts.method));
    let cfg = SummaryConfig { statistic: opts.method, ..cfg };
    let nx = x.len();
    let pool = concat(x, z)?;
    let observed = {
        let lam = vec![nx as f64 / x.volume(); nx];
        second_order_local(x, &lam, &cfg, None)?
    };

    let p_values: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = rng::substream(opts.seed, i as u64);
            let candidates: Vec<usize> = match opts.scheme {
                NullScheme::Relabel => (0..pool.len()).filter(|&j| j != i).collect(),
                NullScheme::Subsample => (nx..pool.len()).collect(),
            };
            let m = (nx - 1).min(candidates.len());
            let mut draws = Vec::with_capacity(opts.k);
            for _ in 0..opts.k {
                let mut idx = Vec::with_capacity(m + 1);
                idx.push(i);
                idx.extend(sample(&mut rng, candidates.len(), m).into_iter().map(|c| candidates[c]));
                draws.push(lista_of_first(&pool.select(&idx), &cfg)?);
            }
            let obs = &observed.surfaces[i].estimate;
            let (t_obs, null): (f64, Vec<f64>) = match opts.scheme {
                NullScheme::Relabel => {
                    let all: Vec<&Vec<f64>> = std::iter::once(obs).chain(draws.iter()).collect();
                    let stat = |m: usize| {
                        let others: Vec<&Vec<f64>> =
                            all.iter().enumerate().filter(|(j, _)| *j != m).map(|(_, s)| *s).collect();
                        sq_dist_to_mean(all[m], &others)
                    };
                    (stat(0), (1..=opts.k).map(stat).collect())
                }
                NullScheme::Subsample => {
                    if opts.k == 1 {
                        return Ok(1.0);
                    }
                    let refs: Vec<&Vec<f64>> = draws.iter().collect();
                    let t = sq_dist_to_mean(obs, &refs);
                    let null = (0..opts.k)
                        .map(|j| {
                            let others: Vec<&Vec<f64>> =
                                refs.iter().enumerate().filter(|(m, _)| *m != j).map(|(_, s)| *s).collect();
                            sq_dist_to_mean(refs[j], &others)
                        })
                        .collect();
                    (t, null)
                }
            };
            let exceed = null.iter().filter(|&&t| t >= t_obs).count();
            Ok((1 + exceed) as f64 / (opts.k + 1) as f64)
        })
        .collect::<Result<_>>()?;
    let significant = (0..nx).filter(|&i| p_values[i] <= opts.alpha).map(|i| i + 1).collect();
    Ok(LocalTestResult {
        p_values,
        significant,
        k: opts.k,
        alpha: opts.alpha,
        method: opts.method,
        scheme: opts.scheme,
        n_x: nx,
        n_z: z.len(),
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDiagResult {
    pub surface: SummarySurface,
    /// Estimate minus theoretical, r-major.
    pub difference: Vec<f64>,
    pub sum_sq: f64,
}

impl fmt::Display for GlobalDiagResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sum of squared differences : {:.3}", self.sum_sq)
    }
}

/// Global diagnostic of an intensity: the weighted K-function against its
/// Poisson value, summarised by the sum of squared differences over the grid.
pub fn globaldiag(pattern: &PointPattern, lambda: &[f64], cfg: Option<&SummaryConfig>) -> Result<GlobalDiagResult> {
    let cfg = cfg.cloned().unwrap_or_else(|| SummaryConfig::default_for(pattern, Statistic::K));
    let surface = second_order_global(pattern, lambda, &cfg)?;
    let difference = surface.difference();
    let sum_sq = difference.iter().map(|d| d * d).sum();
    Ok(GlobalDiagResult { surface, difference, sum_sq })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDiagResult {
    /// `Dᵢ = Σ (K̂ᵢ − K̄)²` over the grid.
    pub scores: Vec<f64>,
    pub p: f64,
    /// Type-7 `p`-quantile of the scores.
    pub threshold: f64,
    /// 1-based ids with `Dᵢ > threshold`.
    pub flagged: Vec<usize>,
    pub lista: ListaSet,
}

impl fmt::Display for LocalDiagResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Points outlying from the {} percentile", self.p)?;
        writeln!(f, "of the individual K-function discrepancies: {} outlying points", self.flagged.len())?;
        let ids: Vec<String> = self.flagged.iter().map(|i| i.to_string()).collect();
        write!(f, "Ids: {}", ids.join(" "))
    }
}

/// Local diagnostic: per-event LISTA surfaces weighted by `lambda`, scored
/// by squared distance to their mean, flagged above the `p`-quantile.
pub fn localdiag(pattern: &PointPattern, lambda: &[f64], p: f64, cfg: Option<&SummaryConfig>) -> Result<LocalDiagResult> {
    if pattern.len() < 2 {
        return Err(invalid(format!("local diagnostics need at least 2 events, got {}", pattern.len())));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("percentile must lie in (0, 1)"));
    }
    let cfg = cfg.cloned().unwrap_or_else(|| SummaryConfig::default_for(pattern, Statistic::K));
    let lista = second_order_local(pattern, lambda, &cfg, None)?;
    let n = lista.len() as f64;
    let nodes = cfg.nodes();
    let mean: Vec<f64> =
        (0..nodes).map(|g| lista.surfaces.iter().map(|s| s.estimate[g]).sum::<f64>() / n).collect();
    let scores: Vec<f64> = lista
        .surfaces
        .iter()
        .map(|s| s.estimate.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = quantile_sorted(&sorted, p);
    let flagged = (0..scores.len()).filter(|&i| scores[i] > threshold).map(|i| i + 1).collect();
    Ok(LocalDiagResult { scores, p, threshold, flagged, lista })
}

/// Stored LISTA surfaces of the flagged events, or of the requested ids.
pub fn infl<'a>(result: &'a LocalDiagResult, ids: Option<&[usize]>) -> Result<Vec<(usize, &'a SummarySurface)>> {
    let ids = ids.unwrap_or(&result.flagged);
    let n = result.scores.len();
    ids.iter()
        .map(|&id| {
            result.lista.get(id).map(|s| (id, s)).ok_or(Error::IdOutOfRange { id, n })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SpatialWindow, TimeInterval};
    use rand::Rng as _;

    fn uniform(n: usize, seed: u64) -> PointPattern {
        let mut r = rng::stream(seed);
        let ev = (0..n).map(|_| Event { x: r.gen(), y: r.gen(), t: r.gen() }).collect();
        PointPattern::new(ev, SpatialWindow::unit(), TimeInterval::unit()).unwrap()
    }

    #[test]
    fn type7_quantile() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.9) - 3.7).abs() < 1e-12);
    }

    #[test]
    fn localtest_single_point_and_determinism() {
        let x = uniform(1, 1);
        let z = uniform(10, 2);
        let r = localtest(&x, &z, &LocalTestOptions { k: 9, ..Default::default() }).unwrap();
        assert_eq!(r.p_values.len(), 1);
        let x = uniform(15, 3);
        let opts = LocalTestOptions { k: 19, seed: 8, ..Default::default() };
        let a = localtest(&x, &z, &opts).unwrap();
        let b = localtest(&x, &z, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn localtest_warns_on_small_k() {
        let r = localtest(&uniform(5, 1), &uniform(5, 2), &LocalTestOptions { k: 3, ..Default::default() }).unwrap();
        assert!(r.warning.is_some());
        assert!(r.significant.is_empty());
    }

    #[test]
    fn localtest_domain_mismatch() {
        let z = PointPattern::new(vec![], SpatialWindow::new(0.0, 2.0, 0.0, 1.0).unwrap(), TimeInterval::unit()).unwrap();
        assert!(matches!(localtest(&uniform(5, 1), &z, &LocalTestOptions::default()), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn globaldiag_single_event() {
        let p = uniform(1, 4);
        let r = globaldiag(&p, &[1.0], None).unwrap();
        let want: f64 = r.surface.theoretical.iter().map(|t| t * t).sum();
        assert!((r.sum_sq - want).abs() < 1e-12 * want);
    }

    #[test]
    fn localdiag_symmetric_pair_flags_nothing() {
        let p = PointPattern::new(
            vec![Event { x: 0.4, y: 0.5, t: 0.4 }, Event { x: 0.6, y: 0.5, t: 0.6 }],
            SpatialWindow::unit(),
            TimeInterval::unit(),
        )
        .unwrap();
        for q in [0.1, 0.5, 0.9] {
            let r = localdiag(&p, &[2.0; 2], q, None).unwrap();
            assert_eq!(r.scores, vec![0.0, 0.0]);
            assert!(r.flagged.is_empty());
        }
    }

    #[test]
    fn localdiag_sort_oracle_and_infl() {
        let p = uniform(20, 5);
        let r = localdiag(&p, &[20.0; 20], 0.5, None).unwrap();
        let mut s = r.scores.clone();
        s.sort_by(f64::total_cmp);
        let med = 0.5 * (s[9] + s[10]);
        assert_eq!(r.flagged.len(), r.scores.iter().filter(|&&d| d > med).count());
        assert_eq!(infl(&r, None).unwrap().len(), r.flagged.len());
        assert_eq!(infl(&r, Some(&[1])).unwrap().len(), 1);
        assert!(matches!(infl(&r, Some(&[21])), Err(Error::IdOutOfRange { .. })));
    }
}
