use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Distance tolerance used when deciding whether a vertex sits exactly at a
/// given shortest-path distance.
pub const VERTEX_TOLERANCE: f64 = 1e-9;

/// A location on a network: a segment and the arc-length offset from the
/// segment's first endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkPoint {
    pub segment: usize,
    pub offset: f64,
}

/// Undirected graph of straight segments.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetwork {
    vertices: Vec<[f64; 2]>,
    segments: Vec<[usize; 2]>,
    lengths: Vec<f64>,
    total_length: f64,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    vertices: Vec<[f64; 2]>,
    segments: Vec<[usize; 2]>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl LinearNetwork {
    pub fn new(vertices: Vec<[f64; 2]>, segments: Vec<[usize; 2]>) -> Result<Self> {
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(invalid("network vertex coordinates must be finite"));
        }
        let mut seen = HashSet::new();
        let mut lengths = Vec::with_capacity(segments.len());
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (k, &[u, v]) in segments.iter().enumerate() {
            if u >= vertices.len() || v >= vertices.len() {
                return Err(invalid(format!("segment {k} references a missing vertex")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(invalid(format!("duplicate segment {k} ({u}, {v})")));
            }
            let len = (vertices[u][0] - vertices[v][0]).hypot(vertices[u][1] - vertices[v][1]);
            if len <= 0.0 {
                return Err(invalid(format!("segment {k} has zero length")));
            }
            lengths.push(len);
            adjacency[u].push((v, len));
            adjacency[v].push((u, len));
        }
        let total_length: f64 = lengths.iter().sum();
        if total_length <= 0.0 {
            return Err(invalid("network has no segments"));
        }
        Ok(Self { vertices, segments, lengths, total_length, adjacency })
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let raw: NetworkJson = serde_json::from_str(src)?;
        Self::new(raw.vertices, raw.segments)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkJson {
            vertices: self.vertices.clone(),
            segments: self.segments.clone(),
        })
        .expect("network serializes")
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn segments(&self) -> &[[usize; 2]] {
        &self.segments
    }

    pub fn segment_length(&self, segment: usize) -> f64 {
        self.lengths[segment]
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn bounding_box(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            b[0] = b[0].min(v[0]);
            b[1] = b[1].max(v[0]);
            b[2] = b[2].min(v[1]);
            b[3] = b[3].max(v[1]);
        }
        b
    }

    pub fn check_point(&self, p: NetworkPoint) -> Result<()> {
        if p.segment >= self.segments.len() {
            return Err(Error::InvalidSegment(p.segment));
        }
        let len = self.lengths[p.segment];
        if !(p.offset >= 0.0 && p.offset <= len) {
            return Err(invalid(format!(
                "offset {} outside segment {} of length {len}",
                p.offset, p.segment
            )));
        }
        Ok(())
    }

    /// Planar coordinates of a network location.
    pub fn point_xy(&self, p: NetworkPoint) -> (f64, f64) {
        let [u, v] = self.segments[p.segment];
        let f = p.offset / self.lengths[p.segment];
        let (a, b) = (self.vertices[u], self.vertices[v]);
        (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
    }

    /// Nearest network location to `(x, y)` and its Euclidean distance.
    /// Ties go to the lowest segment index.
    pub fn project(&self, x: f64, y: f64) -> (NetworkPoint, f64) {
        let mut best = (NetworkPoint { segment: 0, offset: 0.0 }, f64::INFINITY);
        for (k, &[u, v]) in self.segments.iter().enumerate() {
            let (a, b) = (self.vertices[u], self.vertices[v]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let f = (((x - a[0]) * dx + (y - a[1]) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (a[0] + f * dx, a[1] + f * dy);
            let d = (x - px).hypot(y - py);
            if d < best.1 {
                best = (NetworkPoint { segment: k, offset: f * self.lengths[k] }, d);
            }
        }
        best
    }

    /// Location at arc-length position `s` along the concatenation of all
    /// segments in index order.
    pub fn point_at_arclength(&self, s: f64) -> NetworkPoint {
        let mut acc = 0.0;
        for (k, &len) in self.lengths.iter().enumerate() {
            if s <= acc + len || k + 1 == self.lengths.len() {
                return NetworkPoint { segment: k, offset: (s - acc).clamp(0.0, len) };
            }
            acc += len;
        }
        unreachable!("network has at least one segment")
    }

    /// Uniform random location (length-proportional segment choice).
    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> NetworkPoint {
        self.point_at_arclength(rng.gen::<f64>() * self.total_length)
    }

    fn dijkstra(&self, init: &[(usize, f64)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        for &(v, d) in init {
            if d < dist[v] {
                dist[v] = d;
                heap.push(HeapItem { dist: d, vertex: v });
            }
        }
        while let Some(HeapItem { dist: d, vertex }) = heap.pop() {
            if d > dist[vertex] {
                continue;
            }
            for &(nbr, len) in &self.adjacency[vertex] {
                let nd = d + len;
                if nd < dist[nbr] {
                    dist[nbr] = nd;
                    heap.push(HeapItem { dist: nd, vertex: nbr });
                }
            }
        }
        dist
    }

    /// Shortest-path distances from vertex `source` to every vertex.
    pub fn vertex_distances(&self, source: usize) -> Vec<f64> {
        self.dijkstra(&[(source, 0.0)])
    }

    /// Shortest-path distances from a network location to every vertex.
    pub fn distances_from_point(&self, p: NetworkPoint) -> Vec<f64> {
        let [u, v] = self.segments[p.segment];
        let len = self.lengths[p.segment];
        self.dijkstra(&[(u, p.offset), (v, len - p.offset)])
    }

    /// Shortest-path distance between two locations given the vertex
    /// distance map of `a`. Infinite when `b` is unreachable.
    pub fn distance_with(&self, a: NetworkPoint, from_a: &[f64], b: NetworkPoint) -> f64 {
        let [ub, vb] = self.segments[b.segment];
        let lb = self.lengths[b.segment];
        let mut d = (from_a[ub] + b.offset).min(from_a[vb] + (lb - b.offset));
        if a.segment == b.segment {
            d = d.min((a.offset - b.offset).abs());
        }
        d
    }

    /// Shortest-path distance between two locations.
    pub fn distance(&self, a: NetworkPoint, b: NetworkPoint) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        let from_a = self.distances_from_point(a);
        Ok(self.distance_with(a, &from_a, b))
    }

    /// Symmetric matrix of pairwise shortest-path distances.
    pub fn distance_matrix(&self, points: &[NetworkPoint]) -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let from_i = self.distances_from_point(points[i]);
                (0..n)
                    .map(|j| if j <= i { 0.0 } else { self.distance_with(points[i], &from_i, points[j]) })
                    .collect()
            })
            .collect();
        let mut m = rows;
        for i in 0..n {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        m
    }

    /// Largest finite distance from `origin` to any vertex.
    pub fn eccentricity(&self, origin: NetworkPoint) -> f64 {
        self.distances_from_point(origin)
            .into_iter()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    /// Precomputes the vertex distance map of `origin` for repeated
    /// equidistant-count queries.
    pub fn equidistant_counter(&self, origin: NetworkPoint) -> EquidistantCounter<'_> {
        EquidistantCounter { net: self, origin, from_origin: self.distances_from_point(origin) }
    }

    /// Number of network locations at shortest-path distance exactly `r`
    /// from `origin`.
    pub fn equidistant_count(&self, origin: NetworkPoint, r: f64) -> Result<usize> {
        self.check_point(origin)?;
        self.equidistant_counter(origin).count(r)
    }
}

/// Cached equidistant-count queries for a single origin.
pub struct EquidistantCounter<'a> {
    net: &'a LinearNetwork,
    origin: NetworkPoint,
    from_origin: Vec<f64>,
}

impl EquidistantCounter<'_> {
    pub fn vertex_distances(&self) -> &[f64] {
        &self.from_origin
    }

    pub fn count(&self, r: f64) -> Result<usize> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeLag(r));
        }
        if r == 0.0 {
            return Ok(1);
        }
        let tol = VERTEX_TOLERANCE;
        let net = self.net;
        let mut count = 0;
        for (k, &[u, v]) in net.segments.iter().enumerate() {
            let (du, dv, len) = (self.from_origin[u], self.from_origin[v], net.lengths[k]);
            if k == self.origin.segment {
                // Split at the origin: [u, origin] and [origin, v].
                let o = self.origin.offset;
                if o > tol {
                    count += interior_solutions(du, 0.0, o, r, tol);
                }
                if len - o > tol {
                    count += interior_solutions(0.0, dv, len - o, r, tol);
                }
            } else {
                count += interior_solutions(du, dv, len, r, tol);
            }
        }
        count += self.from_origin.iter().filter(|d| (*d - r).abs() <= tol).count();
        Ok(count)
    }
}

/// Solutions `s` in the open segment interior of
/// `min(dp + s, dq + len - s) = r`.
fn interior_solutions(dp: f64, dq: f64, len: f64, r: f64, tol: f64) -> usize {
    if !dp.is_finite() && !dq.is_finite() {
        return 0;
    }
    let inside = |s: f64| s > tol && s < len - tol;
    if !dq.is_finite() {
        return usize::from(inside(r - dp));
    }
    if !dp.is_finite() {
        return usize::from(inside(dq + len - r));
    }
    let peak = 0.5 * (dq + len - dp);
    let rising = r - dp;
    let falling = dq + len - r;
    let on_rising = inside(rising) && rising <= peak + tol;
    let on_falling = inside(falling) && falling >= peak - tol;
    match (on_rising, on_falling) {
        (true, true) if (rising - falling).abs() <= 2.0 * tol => 1,
        (a, b) => usize::from(a) + usize::from(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> LinearNetwork {
        LinearNetwork::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], vec![[0, 1], [1, 2]]).unwrap()
    }

    fn square() -> LinearNetwork {
        LinearNetwork::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1], [1, 2], [2, 3], [3, 0]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_networks() {
        assert!(LinearNetwork::new(vec![[0.0, 0.0], [0.0, 0.0]], vec![[0, 1]]).is_err());
        assert!(LinearNetwork::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![[0, 2]]).is_err());
        assert!(LinearNetwork::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![[0, 1], [1, 0]]).is_err());
        assert!(LinearNetwork::new(vec![[0.0, 0.0]], vec![]).is_err());
    }

    #[test]
    fn distance_identity_and_path() {
        let net = path();
        let a = NetworkPoint { segment: 0, offset: 0.5 };
        assert_eq!(net.distance(a, a).unwrap(), 0.0);
        let b = NetworkPoint { segment: 1, offset: 1.0 };
        assert!((net.distance(a, b).unwrap() - 1.5).abs() < 1e-15);
        assert!(net.distance(NetworkPoint { segment: 5, offset: 0.0 }, a).is_err());
    }

    #[test]
    fn antipodal_on_cycle() {
        let net = square();
        let a = NetworkPoint { segment: 0, offset: 0.5 };
        let b = NetworkPoint { segment: 2, offset: 0.5 };
        assert!((net.distance(a, b).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn disconnected_is_infinite() {
        let net = LinearNetwork::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![[0, 1], [2, 3]],
        )
        .unwrap();
        let d = net
            .distance(NetworkPoint { segment: 0, offset: 0.2 }, NetworkPoint { segment: 1, offset: 0.2 })
            .unwrap();
        assert!(d.is_infinite());
    }

    #[test]
    fn equidistant_examples() {
        let seg = LinearNetwork::new(vec![[0.0, 0.0], [2.0, 0.0]], vec![[0, 1]]).unwrap();
        let mid = NetworkPoint { segment: 0, offset: 1.0 };
        assert_eq!(seg.equidistant_count(mid, 0.0).unwrap(), 1);
        assert_eq!(seg.equidistant_count(mid, 0.5).unwrap(), 2);
        assert_eq!(seg.equidistant_count(mid, 1.0).unwrap(), 2);
        assert_eq!(seg.equidistant_count(mid, 1.5).unwrap(), 0);
        assert!(seg.equidistant_count(mid, -1.0).is_err());

        let sq = square();
        let corner = NetworkPoint { segment: 0, offset: 0.0 };
        assert_eq!(sq.equidistant_count(corner, 1.5).unwrap(), 2);
        assert_eq!(sq.equidistant_count(corner, 2.0).unwrap(), 1);
        assert_eq!(sq.equidistant_count(corner, 2.5).unwrap(), 0);
    }

    #[test]
    fn projection_snaps_to_nearest_segment() {
        let net = path();
        let (p, d) = net.project(0.4, 0.1);
        assert_eq!(p.segment, 0);
        assert!((p.offset - 0.4).abs() < 1e-15 && (d - 0.1).abs() < 1e-15);
        let (x, y) = net.point_xy(NetworkPoint { segment: 1, offset: 0.25 });
        assert_eq!((x, y), (1.0, 0.25));
    }

    #[test]
    fn json_round_trip() {
        let net = square();
        assert_eq!(LinearNetwork::from_json(&net.to_json()).unwrap(), net);
    }
}
