//! Invariants checked over generated inputs.

use std::sync::Arc;

use proptest::prelude::*;
use stpp::covariates::{idw_value, interpolate_idw, CovariateSample, GridSpec};
use stpp::diagnostics::{globaldiag, localdiag};
use stpp::fit::{make_quadrature, stppm, StppmOptions};
use stpp::formula::{build_design, parse_formula, DesignPoints};
use stpp::geometry::{Event, LinearNetwork, MarkValues, NetworkPoint, PatternBuilder, PointPattern, SpatialWindow, TimeInterval};
use stpp::io::{read_pattern_csv, write_pattern_csv};
use stpp::lgcp::{CovFamily, CovParams, CovarianceModel};
use stpp::simulate::{sim_poisson, IntensitySpec, SimDomain};
use stpp::summaries::{second_order_global, Correction, Statistic, SummaryConfig};

fn unit_domain() -> SimDomain {
    SimDomain::Planar { window: SpatialWindow::unit(), interval: TimeInterval::unit() }
}

fn poisson(lambda: f64, seed: u64) -> PointPattern {
    sim_poisson(&IntensitySpec::Constant(lambda), &unit_domain(), seed).unwrap().pattern
}

fn events() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 2..40)
        .prop_map(|v| v.into_iter().map(|(x, y, t)| Event { x, y, t }).collect())
}

/// 4×3 lattice plus three diagonals: 20 segments.
fn lattice() -> LinearNetwork {
    let mut vertices = Vec::new();
    for j in 0..3 {
        for i in 0..4 {
            vertices.push([i as f64, j as f64]);
        }
    }
    let v = |i: usize, j: usize| j * 4 + i;
    let mut segments = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            segments.push([v(i, j), v(i + 1, j)]);
        }
    }
    for j in 0..2 {
        for i in 0..4 {
            segments.push([v(i, j), v(i, j + 1)]);
        }
    }
    segments.extend([[v(0, 0), v(1, 1)], [v(1, 1), v(2, 2)], [v(2, 0), v(3, 1)]]);
    LinearNetwork::new(vertices, segments).unwrap()
}

fn net_point(net: &LinearNetwork, seg: usize, u: f64) -> NetworkPoint {
    NetworkPoint { segment: seg, offset: u * net.segment_length(seg) }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn network_distance_is_a_metric(
        a in (0..20usize, 0.0..1.0f64),
        b in (0..20usize, 0.0..1.0f64),
        c in (0..20usize, 0.0..1.0f64),
    ) {
        let net = lattice();
        let (a, b, c) = (net_point(&net, a.0, a.1), net_point(&net, b.0, b.1), net_point(&net, c.0, c.1));
        let d = |p, q| net.distance(p, q).unwrap();
        prop_assert!(d(a, b) >= 0.0);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-12);
        prop_assert_eq!(d(a, a), 0.0);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
    }

    #[test]
    fn pattern_csv_round_trip(ev in events()) {
        let p = PointPattern::new(ev, SpatialWindow::unit(), TimeInterval::unit()).unwrap();
        let mut buf = Vec::new();
        write_pattern_csv(&p, &mut buf).unwrap();
        let q = read_pattern_csv(buf.as_slice(), None, Some(SpatialWindow::unit()), Some(TimeInterval::unit())).unwrap();
        prop_assert_eq!(p.events(), q.events());
    }

    #[test]
    fn idw_bounded_and_order_free(
        raw in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, -5.0..5.0f64), 1..25),
        power in 0.5..6.0f64,
        shift in 0usize..25,
    ) {
        let samples: Vec<CovariateSample> =
            raw.iter().map(|&(x, y, t, value)| CovariateSample { x, y, t, value }).collect();
        let spec = GridSpec::Dims { nx: 5, ny: 4, nt: 3 };
        let g = interpolate_idw(&samples, "z", spec, power, SpatialWindow::unit(), TimeInterval::unit()).unwrap().grid;
        let lo = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(g.values.iter().all(|v| *v >= lo && *v <= hi));

        let mut rotated = samples.clone();
        rotated.rotate_left(shift % samples.len());
        rotated.reverse();
        let h = interpolate_idw(&rotated, "z", spec, power, SpatialWindow::unit(), TimeInterval::unit()).unwrap().grid;
        prop_assert_eq!(g.values, h.values);
    }

    #[test]
    fn formula_print_reparses(
        terms in prop::collection::vec(
            prop::collection::vec((0..4usize, 0..3u32, 0..4usize), 1..3),
            0..4,
        ),
        intercept in any::<bool>(),
    ) {
        let vars = ["x", "y", "t", "z"];
        let factor = |&(v, kind, w): &(usize, u32, usize)| match kind {
            0 => vars[v].to_string(),
            1 => format!("I({}^{})", vars[v], 2 + w % 2),
            _ => format!("I({}*{})", vars[v], vars[w]),
        };
        let mut parts: Vec<String> = terms.iter().map(|t| t.iter().map(factor).collect::<Vec<_>>().join(":")).collect();
        if parts.is_empty() {
            parts.push("1".into());
        }
        let mut src = format!("~ {}", parts.join(" + "));
        if !intercept {
            src.push_str(" - 1");
        }
        let parsed = parse_formula(&src);
        prop_assume!(parsed.is_ok());
        let f = parsed.unwrap();
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn design_rows_do_not_couple(a in events(), b in events()) {
        let f = parse_formula("~ x + I(y^2) + x:t + I(x*y*t)").unwrap();
        let pts = |ev: &[Event]| DesignPoints {
            x: ev.iter().map(|e| e.x).collect(),
            y: ev.iter().map(|e| e.y).collect(),
            t: ev.iter().map(|e| e.t).collect(),
            marks: Vec::new(),
        };
        let both: Vec<Event> = a.iter().chain(&b).copied().collect();
        let (da, db, dab) = (
            build_design(&f, &pts(&a), &[]).unwrap(),
            build_design(&f, &pts(&b), &[]).unwrap(),
            build_design(&f, &pts(&both), &[]).unwrap(),
        );
        for i in 0..a.len() {
            prop_assert_eq!(dab.row(i), da.row(i));
        }
        for i in 0..b.len() {
            prop_assert_eq!(dab.row(a.len() + i), db.row(i));
        }
        let xt = dab.names.iter().position(|n| n == "x:t").unwrap();
        for (i, e) in both.iter().enumerate() {
            prop_assert_eq!(dab.row(i)[xt], e.x * e.t);
        }
    }

    #[test]
    fn pcf_at_least_one(
        fam in 0..3usize,
        sigma in 0.01..5.0f64,
        alpha in 0.01..2.0f64,
        beta in 0.01..2.0f64,
        r in 0.0..3.0f64,
        h in 0.0..3.0f64,
    ) {
        let family = [CovFamily::SepExp, CovFamily::gneiting(), CovFamily::iaco_cesare()][fam];
        let m = CovarianceModel::new(family, CovParams::new(sigma, alpha, beta).unwrap()).unwrap();
        prop_assert!(m.pcf(r, h).unwrap() >= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn k_nondecreasing(seed in 0u64..1000) {
        let p = poisson(80.0, seed);
        prop_assume!(p.len() >= 2);
        let lambda = vec![p.len() as f64; p.len()];
        let cfg = SummaryConfig::default_for(&p, Statistic::K);
        let s = second_order_global(&p, &lambda, &cfg).unwrap();
        let nh = s.h.len();
        for ir in 0..s.r.len() {
            for ih in 0..nh {
                if ir > 0 {
                    prop_assert!(s.get(ir, ih) >= s.get(ir - 1, ih));
                }
                if ih > 0 {
                    prop_assert!(s.get(ir, ih) >= s.get(ir, ih - 1));
                }
            }
        }
    }

    #[test]
    fn homogeneous_fit_ignores_dummy_grid(seed in 0u64..1000, nx in 2usize..9, ny in 2usize..9, nt in 2usize..9) {
        let p = poisson(60.0, seed);
        let opts = StppmOptions { nd: Some([nx, ny, nt]), seed, ..StppmOptions::default() };
        let m = stppm(&p, &parse_formula("~ 1").unwrap(), &[], &opts).unwrap();
        prop_assert!((m.coefficients[0] - (p.len() as f64 / p.volume()).ln()).abs() < 1e-8);
    }

    #[test]
    fn score_vanishes_at_estimate(seed in 0u64..1000) {
        let spec = IntensitySpec::expression("exp(2 + 6 * x)", vec![], vec![]).unwrap();
        let p = sim_poisson(&spec, &unit_domain(), seed).unwrap().pattern;
        let f = parse_formula("~ x + t").unwrap();
        let opts = StppmOptions { seed, ..StppmOptions::default() };
        let m = stppm(&p, &f, &[], &opts).unwrap();
        let q = make_quadrature(&p, None, seed).unwrap();
        let d = build_design(&f, &q.points(), &[]).unwrap();
        let mut score = vec![0.0; d.ncols];
        for k in 0..q.len() {
            let mu = d.linear_predictor(k, &m.coefficients).exp();
            let z = if q.is_data[k] { 1.0 } else { 0.0 };
            for (j, s) in score.iter_mut().enumerate() {
                *s += (z - q.weights[k] * mu) * d.row(k)[j];
            }
        }
        let max = score.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        prop_assert!(max < 1e-6 * p.len() as f64, "score {:?}", score);
    }

    #[test]
    fn per_type_intercepts_match_separate_fits(seed in 0u64..1000) {
        let (a, b) = (poisson(40.0, 2 * seed), poisson(90.0, 2 * seed + 1));
        let mut ev: Vec<Event> = a.events().to_vec();
        ev.extend_from_slice(b.events());
        let labels: Vec<&str> = (0..ev.len()).map(|i| if i < a.len() { "a" } else { "b" }).collect();
        let joint = PatternBuilder::new(ev)
            .mark("type", MarkValues::categorical(&labels))
            .window(SpatialWindow::unit())
            .interval(TimeInterval::unit())
            .build()
            .unwrap();
        let f = parse_formula("~ 1").unwrap();
        let opts = StppmOptions { marked: Some("type".into()), seed, ..StppmOptions::default() };
        let m = stppm(&joint, &f, &[], &opts).unwrap();
        let sep = |p: &PointPattern| stppm(p, &f, &[], &StppmOptions { seed, ..StppmOptions::default() }).unwrap().fitted[0];
        let (la, lb) = (sep(&a), sep(&b));
        for (i, l) in m.fitted.iter().enumerate() {
            let want = if labels[i] == "a" { la } else { lb };
            prop_assert!((l.ln() - want.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn globaldiag_ignores_event_order(seed in 0u64..1000, key in any::<u64>()) {
        let p = poisson(60.0, seed);
        let lambda: Vec<f64> = p.events().iter().map(|e| 40.0 + 30.0 * e.x).collect();
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by_key(|&i| (i as u64).wrapping_mul(key | 1).rotate_left(17));
        let ev: Vec<Event> = idx.iter().map(|&i| p.events()[i]).collect();
        let q = PointPattern::new(ev, SpatialWindow::unit(), TimeInterval::unit()).unwrap();
        let lq: Vec<f64> = idx.iter().map(|&i| lambda[i]).collect();
        let (g, h) = (globaldiag(&p, &lambda, None).unwrap(), globaldiag(&q, &lq, None).unwrap());
        prop_assert_eq!(g.sum_sq.to_bits(), h.sum_sq.to_bits());
    }

    #[test]
    fn localdiag_count_matches_sort(seed in 0u64..1000, pct in 0.05..0.95f64) {
        let p = poisson(40.0, seed);
        prop_assume!(p.len() >= 3);
        let lambda = vec![p.len() as f64; p.len()];
        let r = localdiag(&p, &lambda, pct, None).unwrap();
        let mut sorted = r.scores.clone();
        sorted.sort_by(f64::total_cmp);
        let h = pct * (sorted.len() - 1) as f64;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        let q = sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]);
        let want: Vec<usize> = (0..p.len()).filter(|&i| r.scores[i] > q).map(|i| i + 1).collect();
        prop_assert_eq!(r.flagged.len(), want.len());
        prop_assert_eq!(&r.flagged, &want);
        prop_assert!(r.flagged.len() <= p.len());
    }
}

/// Doubling all coordinates and quartering the intensity scales K by four.
#[test]
fn k_scale_equivariance() {
    let p = poisson(120.0, 11);
    let lambda: Vec<f64> = p.events().iter().map(|e| 80.0 + 60.0 * e.y).collect();
    let cfg = SummaryConfig::new(vec![0.05, 0.1, 0.15, 0.2], vec![0.1, 0.2], Statistic::K).with_correction(Correction::None);
    let s = second_order_global(&p, &lambda, &cfg).unwrap();

    let ev: Vec<Event> = p.events().iter().map(|e| Event { x: 2.0 * e.x, y: 2.0 * e.y, t: e.t }).collect();
    let big = PointPattern::new(ev, SpatialWindow::new(0.0, 2.0, 0.0, 2.0).unwrap(), TimeInterval::unit()).unwrap();
    let l4: Vec<f64> = lambda.iter().map(|l| l / 4.0).collect();
    let cfg2 = SummaryConfig::new(cfg.r.iter().map(|r| 2.0 * r).collect(), cfg.h.clone(), Statistic::K)
        .with_correction(Correction::None);
    let s2 = second_order_global(&big, &l4, &cfg2).unwrap();
    for (a, b) in s.estimate.iter().zip(&s2.estimate) {
        assert!((b - 4.0 * a).abs() <= 1e-9 * b.abs().max(1.0), "{b} vs {}", 4.0 * a);
    }
}

/// The count of sampled network locations within distance r grows at rate
/// m_L(origin, r) away from vertex distances.
#[test]
fn equidistant_count_is_the_distance_derivative() {
    let net = Arc::new(lattice());
    let delta = 1e-4;
    let band = 0.02;
    let samples: Vec<NetworkPoint> =
        (0..(net.total_length() / delta) as usize).map(|k| net.point_at_arclength((k as f64 + 0.5) * delta)).collect();
    for origin in [net_point(&net, 0, 0.3), net_point(&net, 18, 0.55), net_point(&net, 12, 0.81)] {
        let ctr = net.equidistant_counter(origin);
        let from = ctr.vertex_distances().to_vec();
        let dist: Vec<f64> = samples.iter().map(|&q| net.distance_with(origin, &from, q)).collect();
        let mut checked = 0;
        for r in [0.13, 0.37, 0.61, 1.13, 1.57, 2.21, 2.83] {
            if from.iter().any(|&v| v > r - band && v < r + 2.0 * band) {
                continue;
            }
            let within = |s: f64| dist.iter().filter(|&&d| d <= s).count();
            assert!(within(r) <= within(r + band));
            let rate = (within(r + band) - within(r)) as f64 * delta / band;
            let m = ctr.count(r + band / 2.0).unwrap() as f64;
            assert!((rate - m).abs() < 0.05 * m.max(1.0), "origin {origin:?}, r {r}: {rate} vs {m}");
            checked += 1;
        }
        assert!(checked >= 3);
    }
}

/// With p = 64 the interpolant at a node is within 1e-3 of its nearest
/// sample's value whenever the nearest distance is below 0.9 of the second
/// nearest. Values are kept in [0, 1]: the gap is about 0.9^64 ≈ 1.2e-3
/// times the value range.
#[test]
fn idw_large_power_tends_to_nearest() {
    use rand::Rng;
    let mut rng = stpp::rng::stream(64);
    let samples: Vec<CovariateSample> = (0..30)
        .map(|_| CovariateSample { x: rng.gen(), y: rng.gen(), t: rng.gen(), value: rng.gen() })
        .collect();
    let mut checked = 0;
    while checked < 20 {
        let node: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let mut d: Vec<(f64, f64)> = samples
            .iter()
            .map(|s| (((s.x - node[0]).powi(2) + (s.y - node[1]).powi(2) + (s.t - node[2]).powi(2)).sqrt(), s.value))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d[0].0 >= 0.9 * d[1].0 {
            continue;
        }
        let v = idw_value(&samples, node[0], node[1], node[2], 64.0).unwrap();
        assert!((v - d[0].1).abs() < 1e-3, "{v} vs {}", d[0].1);
        checked += 1;
    }
}
