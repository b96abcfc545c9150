use std::f64::consts::{LN_10, PI};

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::SimDomain;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Event, Mark, MarkValues, NetworkPoint};
use crate::rng::{self, Rng};

const MAX_GENERATIONS: usize = 10_000;
const MAX_EVENTS: usize = 2_000_000;

/// ETAS parameters. The triggering intensity of an event with magnitude `m`
/// at lag `(Δs, Δt)` is `k0 e^{β(m−m0)} (Δt+c)^{-p} (|Δs|²+d)^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtasParams {
    /// Background events per unit time over the whole domain.
    pub mu: f64,
    pub k0: f64,
    pub c: f64,
    pub p: f64,
    pub d: f64,
    pub q: f64,
    pub beta: f64,
    pub m0: f64,
    /// Gutenberg-Richter slope.
    pub b: f64,
}

impl EtasParams {
    /// From the vector `(μ, k0, c, p, d, q)` with `m0 = 2.5`, `b = 1`.
    pub fn from_vector(v: [f64; 6], beta: f64) -> Self {
        Self { mu: v[0], k0: v[1], c: v[2], p: v[3], d: v[4], q: v[5], beta, m0: 2.5, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu >= 0.0
            && self.k0 >= 0.0
            && self.c > 0.0
            && self.p > 1.0
            && self.d > 0.0
            && self.q > 1.0
            && self.b > 0.0
            && self.beta.is_finite()
            && self.m0.is_finite()
            && [self.mu, self.k0, self.c, self.p, self.d, self.q, self.b].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid ETAS parameters {self:?}")))
        }
    }

    /// Integral of the temporal kernel `(Δt+c)^{-p}` over `Δt > 0`.
    pub fn time_integral(&self) -> f64 {
        self.c.powf(1.0 - self.p) / (self.p - 1.0)
    }

    /// Integral of the spatial kernel `(r²+d)^{-q}` over the plane.
    pub fn space_integral(&self) -> f64 {
        PI * self.d.powf(1.0 - self.q) / (self.q - 1.0)
    }

    /// Expected number of direct offspring of an event with magnitude `m`.
    pub fn productivity(&self, m: f64) -> f64 {
        self.k0 * (self.beta * (m - self.m0)).exp() * self.time_integral() * self.space_integral()
    }

    /// Mean offspring per event under the magnitude law; infinite when
    /// `β ≥ b ln 10`.
    pub fn branching_ratio(&self) -> f64 {
        let rate = self.b * LN_10;
        if self.beta >= rate {
            return f64::INFINITY;
        }
        self.k0 * self.time_integral() * self.space_integral() * rate / (rate - self.beta)
    }
}

/// Omori lag by inversion: `τ = c (u^{1/(1-p)} − 1)`.
pub fn sample_omori_lag(c: f64, p: f64, rng: &mut Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    c * (u.powf(1.0 / (1.0 - p)) - 1.0)
}

/// `P(τ ≤ x)` for the normalised Omori kernel.
pub fn omori_cdf(x: f64, c: f64, p: f64) -> f64 {
    1.0 - (1.0 + x / c).powf(1.0 - p)
}

/// Offspring distance by inversion: `r = sqrt(d (1−u)^{-1/(q-1)} − d)`.
pub fn sample_radius(d: f64, q: f64, rng: &mut Rng) -> f64 {
    let u: f64 = rng.gen();
    (d * (1.0 - u).powf(-1.0 / (q - 1.0)) - d).max(0.0).sqrt()
}

/// `P(R ≤ r)` for the planar power-law kernel.
pub fn radius_cdf(r: f64, d: f64, q: f64) -> f64 {
    1.0 - (1.0 + r * r / d).powf(1.0 - q)
}

#[derive(Debug, Clone)]
pub struct EtasOutput {
    /// Events inside the domain, sorted by time, with marks `magnitude` and
    /// `generation`.
    pub pattern: crate::geometry::PointPattern,
    /// Events whose offspring were drawn (all events with t inside the interval).
    pub parents: usize,
    /// Offspring drawn, including those falling after the interval end.
    pub offspring: usize,
    pub generations: usize,
    pub branching_ratio: f64,
    pub warning: Option<String>,
}

impl EtasOutput {
    pub fn mean_offspring(&self) -> f64 {
        if self.parents == 0 {
            0.0
        } else {
            self.offspring as f64 / self.parents as f64
        }
    }
}

#[derive(Clone, Copy)]
struct Quake {
    x: f64,
    y: f64,
    t: f64,
    m: f64,
    gen: usize,
    net: Option<NetworkPoint>,
}

/// Branching simulation of an ETAS catalog.
///
/// Background events are Poisson(μ|T|), uniform on the domain. Each event
/// spawns Poisson(κ(m)) children with Omori lags and power-law planar
/// displacements; on a network the displaced location is snapped to the
/// nearest network point. Children after the interval end are not expanded;
/// children outside the window are expanded but dropped from the output.
pub fn sim_etas(params: &EtasParams, domain: &SimDomain, seed: u64) -> Result<EtasOutput> {
    params.validate()?;
    let eta = params.branching_ratio();
    let warning = (eta >= 1.0).then(|| {
        let w = format!("branching ratio {eta:.4} ≥ 1: the cascade is supercritical and is bounded only by the time horizon");
        log::warn!("{w}");
        w
    });
    let mut rng = rng::stream(seed);
    let iv = *domain.interval();
    let mags = Exp::new(params.b * LN_10).map_err(|e| invalid(e.to_string()))?;
    let draw_mag = |rng: &mut Rng| params.m0 + mags.sample(rng);

    let mut all: Vec<Quake> = Vec::new();
    let n0 = poisson(params.mu * iv.length(), &mut rng)?;
    for _ in 0..n0 {
        let (x, y, net) = match domain {
            SimDomain::Planar { window: w, .. } => {
                (w.x0 + rng.gen::<f64>() * w.width(), w.y0 + rng.gen::<f64>() * w.height(), None)
            }
            SimDomain::Network { network, .. } => {
                let p = network.uniform_point(&mut rng);
                let (x, y) = network.point_xy(p);
                (x, y, Some(p))
            }
        };
        let t = iv.t0 + rng.gen::<f64>() * iv.length();
        let m = draw_mag(&mut rng);
        all.push(Quake { x, y, t, m, gen: 0, net });
    }

    let mut offspring = 0usize;
    let mut parents = 0usize;
    let mut generations = 0usize;
    let mut frontier: Vec<usize> = (0..all.len()).collect();
    while !frontier.is_empty() {
        if generations >= MAX_GENERATIONS {
            return Err(Error::Subcriticality(format!(
                "cascade still active after {MAX_GENERATIONS} generations (branching ratio {eta:.4})"
            )));
        }
        generations += 1;
        let mut next = Vec::new();
        for &pi in &frontier {
            let parent = all[pi];
            parents += 1;
            let k = poisson(params.productivity(parent.m), &mut rng)?;
            offspring += k;
            for _ in 0..k {
                let t = parent.t + sample_omori_lag(params.c, params.p, &mut rng);
                let r = sample_radius(params.d, params.q, &mut rng);
                let theta = 2.0 * PI * rng.gen::<f64>();
                let m = draw_mag(&mut rng);
                if t > iv.t1 {
                    continue;
                }
                let (mut x, mut y) = (parent.x + r * theta.cos(), parent.y + r * theta.sin());
                let mut net = None;
                if let SimDomain::Network { network, .. } = domain {
                    let (p, _) = network.project(x, y);
                    (x, y) = network.point_xy(p);
                    net = Some(p);
                }
                next.push(all.len());
                all.push(Quake { x, y, t, m, gen: generations, net });
                if all.len() > MAX_EVENTS {
                    return Err(Error::Subcriticality(format!(
                        "cascade exceeded {MAX_EVENTS} events (branching ratio {eta:.4})"
                    )));
                }
            }
        }
        frontier = next;
    }

    let mut kept: Vec<Quake> = all
        .into_iter()
        .filter(|q| match domain {
            SimDomain::Planar { window, .. } => window.contains(q.x, q.y),
            SimDomain::Network { .. } => true,
        })
        .collect();
    kept.sort_by(|a, b| a.t.total_cmp(&b.t));
    let events = kept.iter().map(|q| Event { x: q.x, y: q.y, t: q.t }).collect();
    let coords = kept.iter().filter_map(|q| q.net).collect();
    let marks = vec![
        Mark { name: "magnitude".into(), values: MarkValues::Continuous(kept.iter().map(|q| q.m).collect()) },
        Mark { name: "generation".into(), values: MarkValues::Continuous(kept.iter().map(|q| q.gen as f64).collect()) },
    ];
    let pattern = domain.pattern(events, coords)?.with_marks(marks)?;
    Ok(EtasOutput { pattern, parents, offspring, generations, branching_ratio: eta, warning })
}

fn poisson(mean: f64, rng: &mut Rng) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as usize)
}
