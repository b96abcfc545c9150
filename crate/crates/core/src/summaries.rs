use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{temporal_multiplicity, LinearNetwork, NetworkPoint, PointPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    K,
    #[serde(rename = "g")]
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    None,
    Translation,
}

/// Lag grids and estimator options for the second-order summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub statistic: Statistic,
    /// Planar only; networks always use the geometric correction.
    pub correction: Correction,
    pub bandwidth_r: f64,
    pub bandwidth_h: f64,
    /// With `false` the domain-volume prefactor is replaced by `1/Σ 1/λᵢ`.
    pub normalize: bool,
}

fn equispaced(max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| max * k as f64 / n as f64).collect()
}

impl SummaryConfig {
    /// Explicit grids with default bandwidths (0.1 of the grid maxima).
    pub fn new(r: Vec<f64>, h: Vec<f64>, statistic: Statistic) -> Self {
        let br = 0.1 * r.last().copied().unwrap_or(0.0);
        let bh = 0.1 * h.last().copied().unwrap_or(0.0);
        Self {
            r,
            h,
            statistic,
            correction: Correction::Translation,
            bandwidth_r: br,
            bandwidth_h: bh,
            normalize: true,
        }
    }

    /// Ten equispaced lags on each axis up to a quarter of the domain.
    ///
    /// On networks the spatial maximum is `2.5 · |L| / #segments`, capped at
    /// the eccentricity of vertex 0.
    pub fn default_for(pattern: &PointPattern, statistic: Statistic) -> Self {
        let hmax = pattern.interval().length() / 4.0;
        let rmax = match pattern.network() {
            Some(net) => {
                let mean_seg = net.total_length() / net.segments().len() as f64;
                let ecc = net.vertex_distances(0).into_iter().filter(|d| d.is_finite()).fold(0.0, f64::max);
                let r = 2.5 * mean_seg;
                if ecc > 0.0 {
                    r.min(ecc)
                } else {
                    r
                }
            }
            None => pattern.window().width().min(pattern.window().height()) / 4.0,
        };
        Self::new(equispaced(rmax, 10), equispaced(hmax, 10), statistic)
    }

    pub fn with_correction(mut self, c: Correction) -> Self {
        self.correction = c;
        self
    }

    pub fn with_bandwidths(mut self, br: f64, bh: f64) -> Self {
        self.bandwidth_r = br;
        self.bandwidth_h = bh;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn validate(&self, pattern: &PointPattern) -> Result<()> {
        for (name, g) in [("r", &self.r), ("h", &self.h)] {
            if g.is_empty() {
                return Err(invalid(format!("{name} grid is empty")));
            }
            if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(format!("{name} grid must be positive and strictly increasing")));
            }
        }
        if self.statistic == Statistic::G && !(self.bandwidth_r > 0.0 && self.bandwidth_h > 0.0) {
            return Err(invalid("pcf bandwidths must be positive"));
        }
        if pattern.network().is_none() {
            let w = pattern.window();
            let half = 0.5 * w.width().min(w.height());
            if *self.r.last().unwrap() > half * (1.0 + 1e-12) {
                return Err(invalid(format!("r_max exceeds half the shorter window side ({half})")));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.r.len() * self.h.len()
    }
}

/// K or pcf values on an (r, h) grid; `estimate[ir * h.len() + ih]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySurface {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub estimate: Vec<f64>,
    pub theoretical: Vec<f64>,
    /// Ordered pairs skipped because an edge-correction weight vanished.
    pub skipped_pairs: usize,
}

impl SummarySurface {
    pub fn get(&self, ir: usize, ih: usize) -> f64 {
        self.estimate[ir * self.h.len() + ih]
    }

    pub fn theoretical_at(&self, ir: usize, ih: usize) -> f64 {
        self.theoretical[ir * self.h.len() + ih]
    }

    pub fn difference(&self) -> Vec<f64> {
        self.estimate.iter().zip(&self.theoretical).map(|(e, t)| e - t).collect()
    }

    /// Poisson reference surface.
    pub fn theoretical_surface(r: &[f64], h: &[f64], statistic: Statistic, network: bool) -> Vec<f64> {
        let mut out = Vec::with_capacity(r.len() * h.len());
        for &rv in r {
            for &hv in h {
                out.push(match (statistic, network) {
                    (Statistic::G, _) => 1.0,
                    (Statistic::K, false) => 2.0 * PI * rv * rv * hv,
                    (Statistic::K, true) => rv * hv,
                });
            }
        }
        out
    }
}

/// Per-event (LISTA) surfaces, keyed by 1-based event id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListaSet {
    pub ids: Vec<usize>,
    pub surfaces: Vec<SummarySurface>,
}

impl ListaSet {
    pub fn get(&self, id: usize) -> Option<&SummarySurface> {
        self.ids.iter().position(|&i| i == id).map(|k| &self.surfaces[k])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Epanechnikov kernel with half-width `b`.
pub fn epanechnikov(u: f64, b: f64) -> f64 {
    let z = u / b;
    if z.abs() <= 1.0 {
        0.75 * (1.0 - z * z) / b
    } else {
        0.0
    }
}

enum Domain<'a> {
    Planar { correction: Correction },
    Network { net: &'a LinearNetwork, coords: &'a [NetworkPoint] },
}

struct Estimator<'a> {
    pattern: &'a PointPattern,
    lambda: &'a [f64],
    cfg: &'a SummaryConfig,
    domain: Domain<'a>,
    /// Events sorted by (t, x, y, λ); sums run in this order so that the
    /// global estimate does not depend on the input order.
    order: Vec<usize>,
}

impl<'a> Estimator<'a> {
    fn new(pattern: &'a PointPattern, lambda: &'a [f64], cfg: &'a SummaryConfig) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Empty("pattern has no events".into()));
        }
        if lambda.len() != pattern.len() {
            return Err(invalid(format!("{} intensities for {} events", lambda.len(), pattern.len())));
        }
        if let Some(i) = lambda.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid(format!("intensity at event {} is not strictly positive", i + 1)));
        }
        cfg.validate(pattern)?;
        let domain = match (pattern.network(), pattern.network_coords()) {
            (Some(net), Some(coords)) => Domain::Network { net, coords },
            _ => Domain::Planar { correction: cfg.correction },
        };
        let ev = pattern.events();
        let mut order: Vec<usize> = (0..ev.len()).collect();
        order.sort_by(|&a, &b| {
            ev[a].t
                .total_cmp(&ev[b].t)
                .then(ev[a].x.total_cmp(&ev[b].x))
                .then(ev[a].y.total_cmp(&ev[b].y))
                .then(lambda[a].total_cmp(&lambda[b]))
        });
        Ok(Self { pattern, lambda, cfg, domain, order })
    }

    fn is_network(&self) -> bool {
        matches!(self.domain, Domain::Network { .. })
    }

    /// Prefactor shared by every estimate: 1/(|D||T|) or 1/Σ 1/λ.
    fn prefactor(&self) -> f64 {
        if self.cfg.normalize {
            1.0 / self.pattern.volume()
        } else {
            1.0 / self.order.iter().map(|&i| 1.0 / self.lambda[i]).sum::<f64>()
        }
    }

    /// `Σ_{j≠i}` of pair contributions at every grid node, before the prefactor.
    fn row(&self, i: usize) -> (Vec<f64>, usize) {
        let cfg = self.cfg;
        let (nr, nh) = (cfg.r.len(), cfg.h.len());
        let is_k = cfg.statistic == Statistic::K;
        let (reach_r, reach_h) = if is_k {
            (*cfg.r.last().unwrap(), *cfg.h.last().unwrap())
        } else {
            (cfg.r.last().unwrap() + cfg.bandwidth_r, cfg.h.last().unwrap() + cfg.bandwidth_h)
        };
        let events = self.pattern.events();
        let ei = events[i];
        let interval = self.pattern.interval();
        let mut out = vec![0.0; nr * nh];
        let mut skipped = 0;

        let counter = match &self.domain {
            Domain::Network { net, coords } => Some((net.equidistant_counter(coords[i]), *net, *coords)),
            Domain::Planar { .. } => None,
        };

        for &j in &self.order {
            if j == i {
                continue;
            }
            let ej = events[j];
            let dt = (ei.t - ej.t).abs();
            if dt > reach_h {
                continue;
            }
            let (d, mult) = match (&self.domain, &counter) {
                (Domain::Planar { correction }, _) => {
                    let (dx, dy) = (ei.x - ej.x, ei.y - ej.y);
                    let d = dx.hypot(dy);
                    if d > reach_r {
                        continue;
                    }
                    let w = match correction {
                        Correction::None => 1.0,
                        Correction::Translation => {
                            let win = self.pattern.window();
                            (win.width() - dx.abs()) * (win.height() - dy.abs()) * (interval.length() - dt)
                                / (win.area() * interval.length())
                        }
                    };
                    (d, w)
                }
                (Domain::Network { .. }, Some((ctr, net, coords))) => {
                    let d = net.distance_with(coords[i], ctr.vertex_distances(), coords[j]);
                    if d > reach_r {
                        continue;
                    }
                    let ml = ctr.count(d).unwrap_or(0);
                    let mt = temporal_multiplicity(interval, ei.t, dt);
                    (d, (ml * mt as usize) as f64)
                }
                _ => unreachable!(),
            };
            if !(mult > 0.0) {
                skipped += 1;
                continue;
            }
            let c = 1.0 / (self.lambda[i] * self.lambda[j] * mult);
            if is_k {
                let ir = cfg.r.partition_point(|&r| r < d);
                let ih = cfg.h.partition_point(|&h| h < dt);
                out[ir * nh + ih] += c;
            } else {
                for (ir, &r) in cfg.r.iter().enumerate() {
                    let kr = epanechnikov(r - d, cfg.bandwidth_r);
                    if kr == 0.0 {
                        continue;
                    }
                    for (ih, &h) in cfg.h.iter().enumerate() {
                        let kh = epanechnikov(h - dt, cfg.bandwidth_h);
                        if kh != 0.0 {
                            out[ir * nh + ih] += c * kr * kh;
                        }
                    }
                }
            }
        }

        if is_k {
            // Cells hold pairs with r[ir-1] < d ≤ r[ir]; cumulate to indicator sums.
            for ir in 0..nr {
                for ih in 1..nh {
                    out[ir * nh + ih] += out[ir * nh + ih - 1];
                }
            }
            for ir in 1..nr {
                for ih in 0..nh {
                    out[ir * nh + ih] += out[(ir - 1) * nh + ih];
                }
            }
        }
        (out, skipped)
    }

    fn finish(&self, mut sums: Vec<f64>, scale: f64, skipped: usize) -> SummarySurface {
        let cfg = self.cfg;
        let nh = cfg.h.len();
        let planar_g = cfg.statistic == Statistic::G && !self.is_network();
        for (k, v) in sums.iter_mut().enumerate() {
            *v *= scale;
            if planar_g {
                *v /= 4.0 * PI * cfg.r[k / nh];
            }
        }
        SummarySurface {
            r: cfg.r.clone(),
            h: cfg.h.clone(),
            estimate: sums,
            theoretical: SummarySurface::theoretical_surface(&cfg.r, &cfg.h, cfg.statistic, self.is_network()),
            skipped_pairs: skipped,
        }
    }
}

/// Inhomogeneous K-function or pair correlation surface of a pattern,
/// weighted by the intensity `lambda` at each event.
///
/// A single event gives an all-zero estimate.
pub fn second_order_global(pattern: &PointPattern, lambda: &[f64], cfg: &SummaryConfig) -> Result<SummarySurface> {
    let est = Estimator::new(pattern, lambda, cfg)?;
    let rows: Vec<(Vec<f64>, usize)> = est.order.par_iter().map(|&i| est.row(i)).collect();
    let mut total = vec![0.0; cfg.nodes()];
    let mut skipped = 0;
    for (row, s) in &rows {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
        skipped += s;
    }
    Ok(est.finish(total, est.prefactor(), skipped))
}

/// Local (LISTA) surfaces for the events `ids` (1-based; all when `None`).
///
/// Each local surface is `n` times event i's share of the global sum, so the
/// mean over all events reproduces the global surface.
pub fn second_order_local(
    pattern: &PointPattern,
    lambda: &[f64],
    cfg: &SummaryConfig,
    ids: Option<&[usize]>,
) -> Result<ListaSet> {
    let est = Estimator::new(pattern, lambda, cfg)?;
    let n = pattern.len();
    let ids: Vec<usize> = match ids {
        Some(ids) => {
            if let Some(&id) = ids.iter().find(|&&id| id == 0 || id > n) {
                return Err(Error::IdOutOfRange { id, n });
            }
            ids.to_vec()
        }
        None => (1..=n).collect(),
    };
    let scale = n as f64 * est.prefactor();
    let surfaces = ids
        .par_iter()
        .map(|&id| {
            let (row, skipped) = est.row(id - 1);
            est.finish(row, scale, skipped)
        })
        .collect();
    Ok(ListaSet { ids, surfaces })
}
