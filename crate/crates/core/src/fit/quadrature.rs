use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::formula::DesignPoints;
use crate::geometry::{Mark, MarkValues, NetworkPoint, PointPattern};
use crate::rng;

/// Which coordinates the cubature integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    SpaceTime,
    /// Spatial marginal; dummy times are fixed at mid-interval.
    Space,
    /// Temporal marginal; dummy locations are fixed at the window centre.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    /// Cells per axis `[nx, ny, nt]`; on networks `nx·ny` arc-length cells.
    pub dims: [usize; 3],
    pub n_data: usize,
    /// Dummy points per replicate.
    pub n_dummy: usize,
    /// Measure of the integration domain (per replicate).
    pub volume: f64,
    /// Whether a too-small grid was enlarged.
    pub enlarged: bool,
    /// Number of mark types the dummies were replicated over, if any.
    pub replicates: Option<usize>,
}

/// Data events followed by weighted dummy points.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub is_data: Vec<bool>,
    /// Mark columns aligned with the rows; dummies carry the value of the
    /// nearest data event (or their replicate's type).
    pub marks: Vec<Mark>,
    pub network_coords: Option<Vec<NetworkPoint>>,
    pub meta: QuadratureMeta,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn points(&self) -> DesignPoints {
        DesignPoints { x: self.x.clone(), y: self.y.clone(), t: self.t.clone(), marks: self.marks.clone() }
    }

    pub fn data_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.is_data[k])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Default cells per axis: `ceil((4n)^{1/3})`, about 4n dummies in total.
pub fn default_dims(n: usize) -> [usize; 3] {
    let c = ((4 * n.max(1)) as f64).cbrt().ceil() as usize;
    [c, c, c]
}

struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
    jitter: bool,
}

impl Axis {
    fn step(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    fn cell(&self, u: f64) -> usize {
        let f = ((u - self.lo) / self.step()).floor();
        if f <= 0.0 || f.is_nan() {
            0
        } else {
            (f as usize).min(self.n - 1)
        }
    }
}

fn arclength_offsets(p: &PointPattern) -> Vec<f64> {
    let net = p.network().expect("network pattern");
    let mut acc = 0.0;
    let mut cum = Vec::with_capacity(net.segments().len());
    for k in 0..net.segments().len() {
        cum.push(acc);
        acc += net.segment_length(k);
    }
    cum
}

/// Berman–Turner cubature on a stratified dummy grid.
///
/// One dummy per cell, placed uniformly at random within the cell (on
/// networks: at the arc-length centre, jittered in time). Each point's weight
/// is the cell measure divided by the number of data and dummy points in the
/// cell, so the weights sum to the domain measure.
pub fn make_quadrature(pattern: &PointPattern, nd: Option<[usize; 3]>, seed: u64) -> Result<Quadrature> {
    build(pattern, Support::SpaceTime, nd, seed, None)
}

/// Cubature replicated over the levels of the categorical mark `mark`; each
/// replicate holds the data of one type plus a full copy of the dummies.
pub fn make_marked_quadrature(pattern: &PointPattern, mark: &str, nd: Option<[usize; 3]>, seed: u64) -> Result<Quadrature> {
    build(pattern, Support::SpaceTime, nd, seed, Some(mark))
}

pub fn make_marginal_quadrature(pattern: &PointPattern, support: Support, nd: Option<[usize; 3]>, seed: u64) -> Result<Quadrature> {
    build(pattern, support, nd, seed, None)
}

fn build(pattern: &PointPattern, support: Support, nd: Option<[usize; 3]>, seed: u64, mark: Option<&str>) -> Result<Quadrature> {
    let n = pattern.len();
    if n == 0 {
        return Err(Error::Empty("pattern has no events".into()));
    }
    let space = support != Support::Time;
    let time = support != Support::Space;
    let network = pattern.network();

    let mut dims = nd.unwrap_or_else(|| default_dims(n));
    if dims.contains(&0) {
        return Err(invalid("dummy grid dimensions must be positive"));
    }
    if !space {
        dims[0] = 1;
        dims[1] = 1;
    }
    if !time {
        dims[2] = 1;
    }
    let mut enlarged = false;
    let cells = dims[0] * dims[1] * dims[2];
    if cells * 8 < n {
        let def = default_dims(n);
        for a in 0..3 {
            let active = if a < 2 { space } else { time };
            if active {
                dims[a] = dims[a].max(def[a]);
            }
        }
        if !time && space {
            // Spatial-only grids need as many cells in two axes.
            let c = ((4 * n) as f64).sqrt().ceil() as usize;
            dims[0] = dims[0].max(c);
            dims[1] = dims[1].max(c);
        }
        if !space && time {
            dims[2] = dims[2].max(4 * n);
        }
        log::warn!("dummy grid has fewer than one dummy per 8 data points; enlarged to {dims:?}");
        enlarged = true;
    }

    let w = pattern.window();
    let iv = pattern.interval();
    let t_mid = 0.5 * (iv.t0 + iv.t1);
    let (x_mid, y_mid) = (0.5 * (w.x0 + w.x1), 0.5 * (w.y0 + w.y1));

    // Abstract coordinates: planar (x, y, t); network (arc length, 0, t).
    let events = pattern.events();
    let data_u: Vec<[f64; 3]> = match network {
        Some(_) => {
            let cum = arclength_offsets(pattern);
            let coords = pattern.network_coords().expect("network coordinates");
            events.iter().zip(coords).map(|(e, c)| [cum[c.segment] + c.offset, 0.0, e.t]).collect()
        }
        None => events.iter().map(|e| [e.x, e.y, e.t]).collect(),
    };
    let axes: [Axis; 3] = match network {
        Some(net) => [
            Axis { lo: 0.0, hi: net.total_length(), n: if space { dims[0] * dims[1] } else { 1 }, jitter: false },
            Axis { lo: 0.0, hi: 1.0, n: 1, jitter: false },
            Axis { lo: iv.t0, hi: iv.t1, n: dims[2], jitter: true },
        ],
        None => [
            Axis { lo: w.x0, hi: w.x1, n: dims[0], jitter: true },
            Axis { lo: w.y0, hi: w.y1, n: dims[1], jitter: true },
            Axis { lo: iv.t0, hi: iv.t1, n: dims[2], jitter: true },
        ],
    };
    let active = [space, space && network.is_none(), time];
    let cell_measure: f64 = (0..3).filter(|&a| active[a]).map(|a| axes[a].step()).product();
    let volume = match support {
        Support::SpaceTime => pattern.volume(),
        Support::Space => pattern.spatial_measure(),
        Support::Time => iv.length(),
    };

    let mut rng = rng::stream(seed);
    let mut dummy_u: Vec<[f64; 3]> = Vec::with_capacity(axes[0].n * axes[1].n * axes[2].n);
    for k in 0..axes[2].n {
        for j in 0..axes[1].n {
            for i in 0..axes[0].n {
                let idx = [i, j, k];
                let mut u = [0.0; 3];
                for a in 0..3 {
                    let ax = &axes[a];
                    u[a] = if !active[a] {
                        0.0
                    } else if ax.jitter {
                        ax.lo + (idx[a] as f64 + rng.gen::<f64>()) * ax.step()
                    } else {
                        ax.lo + (idx[a] as f64 + 0.5) * ax.step()
                    };
                }
                dummy_u.push(u);
            }
        }
    }
    let n_cells = axes[0].n * axes[1].n * axes[2].n;
    let cell_of = |u: &[f64; 3]| -> usize {
        let c: Vec<usize> = (0..3).map(|a| if active[a] { axes[a].cell(u[a]) } else { 0 }).collect();
        c[0] + axes[0].n * (c[1] + axes[1].n * c[2])
    };

    // Replicates: one per type, or a single one holding every event.
    let (type_codes, levels): (Vec<usize>, Option<(String, Vec<String>)>) = match mark {
        Some(name) => match pattern.mark(name).map(|m| &m.values) {
            Some(MarkValues::Categorical { levels, codes }) => (codes.clone(), Some((name.to_string(), levels.clone()))),
            Some(MarkValues::Continuous(_)) => {
                return Err(invalid(format!("mark `{name}` is continuous; a multitype fit needs a categorical mark")))
            }
            None => return Err(Error::UnresolvedVariable(name.to_string())),
        },
        None => (vec![0; n], None),
    };
    let n_rep = levels.as_ref().map_or(1, |(_, l)| l.len());
    let data_cells: Vec<usize> = data_u.iter().map(&cell_of).collect();
    let mut counts = vec![vec![1usize; n_cells]; n_rep];
    for (i, &c) in data_cells.iter().enumerate() {
        counts[type_codes[i]][c] += 1;
    }

    let to_xy = |u: &[f64; 3]| -> (f64, f64, f64, Option<NetworkPoint>) {
        let t = if time { u[2] } else { t_mid };
        match network {
            Some(net) if space => {
                let p = net.point_at_arclength(u[0]);
                let (x, y) = net.point_xy(p);
                (x, y, t, Some(p))
            }
            Some(_) => (x_mid, y_mid, t, None),
            None if space => (u[0], u[1], t, None),
            None => (x_mid, y_mid, t, None),
        }
    };

    let total = n + n_rep * dummy_u.len();
    let mut q = Quadrature {
        x: Vec::with_capacity(total),
        y: Vec::with_capacity(total),
        t: Vec::with_capacity(total),
        weights: Vec::with_capacity(total),
        is_data: Vec::with_capacity(total),
        marks: Vec::new(),
        network_coords: network.map(|_| Vec::with_capacity(total)),
        meta: QuadratureMeta {
            dims,
            n_data: n,
            n_dummy: dummy_u.len(),
            volume,
            enlarged,
            replicates: levels.as_ref().map(|(_, l)| l.len()),
        },
    };
    let coords = pattern.network_coords();
    for (i, e) in events.iter().enumerate() {
        q.x.push(if space { e.x } else { x_mid });
        q.y.push(if space { e.y } else { y_mid });
        q.t.push(if time { e.t } else { t_mid });
        q.weights.push(cell_measure / counts[type_codes[i]][data_cells[i]] as f64);
        q.is_data.push(true);
        if let (Some(nc), Some(c)) = (q.network_coords.as_mut(), coords) {
            nc.push(c[i]);
        }
    }
    let dummy_xy: Vec<_> = dummy_u.iter().map(&to_xy).collect();
    for rep in 0..n_rep {
        for (u, &(x, y, t, p)) in dummy_u.iter().zip(&dummy_xy) {
            q.x.push(x);
            q.y.push(y);
            q.t.push(t);
            q.weights.push(cell_measure / counts[rep][cell_of(u)] as f64);
            q.is_data.push(false);
            if let Some(nc) = q.network_coords.as_mut() {
                nc.push(p.unwrap_or(NetworkPoint { segment: 0, offset: 0.0 }));
            }
        }
    }

    // Marks: data rows keep their values, dummies copy the nearest event.
    let nearest: Vec<usize> = if pattern.marks().is_empty() {
        Vec::new()
    } else {
        dummy_xy
            .iter()
            .map(|&(x, y, t, _)| {
                let mut best = (f64::INFINITY, 0);
                for (i, e) in events.iter().enumerate() {
                    let mut d = 0.0;
                    if space {
                        d += (e.x - x).powi(2) + (e.y - y).powi(2);
                    }
                    if time {
                        d += (e.t - t).powi(2);
                    }
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                best.1
            })
            .collect()
    };
    for m in pattern.marks() {
        let is_type = levels.as_ref().is_some_and(|(name, _)| *name == m.name);
        let values = match &m.values {
            MarkValues::Continuous(v) => {
                let mut out = v.clone();
                for _ in 0..n_rep {
                    out.extend(nearest.iter().map(|&i| v[i]));
                }
                MarkValues::Continuous(out)
            }
            MarkValues::Categorical { levels: lv, codes } => {
                let mut out = codes.clone();
                for rep in 0..n_rep {
                    if is_type {
                        out.extend(std::iter::repeat_n(rep, dummy_u.len()));
                    } else {
                        out.extend(nearest.iter().map(|&i| codes[i]));
                    }
                }
                MarkValues::Categorical { levels: lv.clone(), codes: out }
            }
        };
        q.marks.push(Mark { name: m.name.clone(), values });
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Event, PatternBuilder, SpatialWindow, TimeInterval};

    fn unit(events: Vec<Event>) -> PatternBuilder {
        PatternBuilder::new(events).window(SpatialWindow::unit()).interval(TimeInterval::unit())
    }

    #[test]
    fn one_point_two_cubed() {
        let p = unit(vec![Event { x: 0.3, y: 0.6, t: 0.2 }]).build().unwrap();
        let q = make_quadrature(&p, Some([2, 2, 2]), 1).unwrap();
        assert_eq!(q.len(), 9);
        assert!((q.total_weight() - 1.0).abs() < 1e-15);
        assert_eq!(q.is_data.iter().filter(|&&d| d).count(), 1);
    }

    #[test]
    fn default_budget_and_determinism() {
        let mut r = rng::stream(5);
        let ev: Vec<Event> = (0..100).map(|_| Event { x: r.gen(), y: r.gen(), t: r.gen() }).collect();
        let p = unit(ev).build().unwrap();
        let a = make_quadrature(&p, None, 9).unwrap();
        let b = make_quadrature(&p, None, 9).unwrap();
        assert_eq!(a.meta.n_dummy, 8 * 8 * 8);
        assert_eq!(a.x, b.x);
        assert!((a.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marked_replicates_sum_per_type() {
        let ev = vec![
            Event { x: 0.1, y: 0.1, t: 0.1 },
            Event { x: 0.2, y: 0.8, t: 0.5 },
            Event { x: 0.9, y: 0.4, t: 0.7 },
        ];
        let p = unit(ev).mark("kind", MarkValues::categorical(&["a", "b", "a"])).build().unwrap();
        let q = make_marked_quadrature(&p, "kind", Some([3, 3, 3]), 2).unwrap();
        let MarkValues::Categorical { codes, .. } = &q.marks[0].values else { unreachable!() };
        for ty in 0..2 {
            let s: f64 = (0..q.len()).filter(|&k| codes[k] == ty).map(|k| q.weights[k]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_sum_to_their_measure() {
        let ev = vec![Event { x: 0.1, y: 0.1, t: 0.1 }, Event { x: 0.5, y: 0.5, t: 0.9 }];
        let p = PatternBuilder::new(ev)
            .window(SpatialWindow::new(0.0, 2.0, 0.0, 3.0).unwrap())
            .interval(TimeInterval::new(0.0, 5.0).unwrap())
            .build()
            .unwrap();
        let s = make_marginal_quadrature(&p, Support::Space, Some([4, 4, 4]), 1).unwrap();
        assert!((s.total_weight() - 6.0).abs() < 1e-12);
        assert!(s.t.iter().all(|&t| t == 2.5));
        let t = make_marginal_quadrature(&p, Support::Time, Some([4, 4, 4]), 1).unwrap();
        assert!((t.total_weight() - 5.0).abs() < 1e-12);
        assert_eq!(t.meta.n_dummy, 4);
    }
}
