#![allow(dead_code)]

use stpp::geometry::{LinearNetwork, PointPattern, SpatialWindow, TimeInterval};
use stpp::simulate::{sim_poisson, IntensitySpec, SimDomain};

pub fn unit_domain() -> SimDomain {
    SimDomain::Planar { window: SpatialWindow::unit(), interval: TimeInterval::unit() }
}

pub fn poisson(lambda: f64, seed: u64) -> PointPattern {
    sim_poisson(&IntensitySpec::Constant(lambda), &unit_domain(), seed).unwrap().pattern
}

/// Poisson pattern with intensity `src` on the unit cube.
pub fn inhomogeneous(src: &str, seed: u64) -> PointPattern {
    let spec = IntensitySpec::expression(src, vec![], vec![]).unwrap();
    sim_poisson(&spec, &unit_domain(), seed).unwrap().pattern
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// A unit square ring with a cross through the middle.
pub fn street_network() -> LinearNetwork {
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0], [0.5, 1.0], [0.0, 0.5], [1.0, 0.5], [0.5, 0.5]];
    let segments = vec![
        [0, 4], [4, 1], [1, 7], [7, 2], [2, 5], [5, 3], [3, 6], [6, 0],
        [4, 8], [8, 5], [6, 8], [8, 7],
    ];
    LinearNetwork::new(vertices, segments).unwrap()
}
