//! The `stpp` command-line tool.
//!
//! Every run writes its artifacts plus a `run.json` manifest into the
//! directory given by `-o`. Exit status is 0 on success, 2 on a usage error
//! and 1 when a computation fails.

pub mod args;
pub mod manifest;
pub mod svg;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Deserialize;

use crate::covariates::{interpolate_idw, CovariateGrid, GridSpec};
use crate::diagnostics::{globaldiag, infl, localdiag, localtest, LocalTestOptions, NullScheme};
use crate::error::Error;
use crate::fit::{locstppm, sep_fit, stppm, LocalOptions, Method, SeparableOptions, StppmOptions};
use crate::formula::parse_formula;
use crate::geometry::{LinearNetwork, PointPattern, SpatialWindow, TimeInterval};
use crate::io;
use crate::lgcp::{sim_lgcp, stlgcppm, CovFamily, CovParams, CovarianceModel, LgcpOptions, Order};
use crate::simulate::{sim_etas, sim_poisson, EtasParams, IntensitySpec, SimDomain};
use crate::summaries::{second_order_global, second_order_local, Correction, Statistic, SummaryConfig};
use args::*;
use manifest::Manifest;

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Compute(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Compute(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    init_logger(cli.verbose);
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("STPP_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) => Some(n),
                Err(_) => {
                    eprintln!("error: STPP_THREADS must be a positive integer, got `{v}`");
                    return 2;
                }
            },
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        eprintln!("error: thread count must be positive");
        return 2;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Compute(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn init_logger(verbose: bool) {
    let level = if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Runs one parsed command.
pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(SimulateCmd::Poisson(a)) => simulate_poisson(cmd, a),
        Command::Simulate(SimulateCmd::Etas(a)) => simulate_etas(cmd, a),
        Command::Simulate(SimulateCmd::Lgcp(a)) => simulate_lgcp(cmd, a),
        Command::Covariate(a) => covariate(cmd, a),
        Command::Summary(a) => summary(cmd, a),
        Command::Fit(FitCmd::Poisson(a)) => fit_poisson(cmd, a),
        Command::Fit(FitCmd::Separable(a)) => fit_separable(cmd, a),
        Command::Fit(FitCmd::LocalPoisson(a)) => fit_local(cmd, a),
        Command::Fit(FitCmd::Lgcp(a)) => fit_lgcp(cmd, a),
        Command::Diagnose(DiagnoseCmd::Global(a)) => diagnose_global(cmd, a),
        Command::Diagnose(DiagnoseCmd::Local(a)) => diagnose_local(cmd, a),
        Command::Test(TestCmd::Local(a)) => test_local(cmd, a),
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Simulate(SimulateCmd::Poisson(_)) => "simulate poisson",
        Command::Simulate(SimulateCmd::Etas(_)) => "simulate etas",
        Command::Simulate(SimulateCmd::Lgcp(_)) => "simulate lgcp",
        Command::Covariate(_) => "covariate",
        Command::Summary(_) => "summary",
        Command::Fit(FitCmd::Poisson(_)) => "fit poisson",
        Command::Fit(FitCmd::Separable(_)) => "fit separable",
        Command::Fit(FitCmd::LocalPoisson(_)) => "fit local-poisson",
        Command::Fit(FitCmd::Lgcp(_)) => "fit lgcp",
        Command::Diagnose(DiagnoseCmd::Global(_)) => "diagnose global",
        Command::Diagnose(DiagnoseCmd::Local(_)) => "diagnose local",
        Command::Test(TestCmd::Local(_)) => "test local",
    }
}

/// Output directory plus the manifest being assembled for it.
struct Run {
    out: PathBuf,
    svg: bool,
    manifest: Manifest,
}

impl Run {
    fn start(cmd: &Command, out: &OutArgs, seed: Option<u64>) -> CliResult<Self> {
        if out.out.exists() && !out.out.is_dir() {
            return Err(usage(format!("output path {} is not a directory", out.out.display())));
        }
        fs::create_dir_all(&out.out)?;
        let flags = serde_json::to_value(cmd)?;
        Ok(Self { out: out.out.clone(), svg: out.svg, manifest: Manifest::new(subcommand_name(cmd), flags, seed) })
    }

    fn input(&mut self, path: &Path) -> CliResult<()> {
        if !path.is_file() {
            return Err(usage(format!("input file {} not found", path.display())));
        }
        self.manifest.add_input(path)?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn writer(&self, name: &str) -> CliResult<BufWriter<File>> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    }

    fn json<T: serde::Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn text(&self, name: &str, s: &str) -> CliResult<()> {
        let mut w = self.writer(name)?;
        w.write_all(s.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn finish(mut self) -> CliResult<()> {
        self.manifest.collect_outputs(&self.out)?;
        self.manifest.write(&self.out)?;
        Ok(())
    }
}

fn window_of(w: Option<[f64; 4]>) -> CliResult<Option<SpatialWindow>> {
    w.map(|[x0, x1, y0, y1]| SpatialWindow::new(x0, x1, y0, y1)).transpose().map_err(|e| usage(e.to_string()))
}

fn interval_of(t: Option<[f64; 2]>) -> CliResult<Option<TimeInterval>> {
    t.map(|[t0, t1]| TimeInterval::new(t0, t1)).transpose().map_err(|e| usage(e.to_string()))
}

fn network_of(run: &mut Run, d: &DomainArgs) -> CliResult<Option<Arc<LinearNetwork>>> {
    match &d.network {
        Some(p) => {
            run.input(p)?;
            Ok(Some(Arc::new(io::read_network_file(p)?)))
        }
        None => Ok(None),
    }
}

fn read_pattern(run: &mut Run, path: &Path, d: &DomainArgs) -> CliResult<PointPattern> {
    run.input(path)?;
    let net = network_of(run, d)?;
    if net.is_some() && d.window.is_some() {
        return Err(usage("--window and --network are mutually exclusive"));
    }
    Ok(io::read_pattern_file(path, net, window_of(d.window)?, interval_of(d.time)?)?)
}

fn sim_domain(run: &mut Run, d: &DomainArgs) -> CliResult<SimDomain> {
    let interval = interval_of(d.time)?.unwrap_or_else(TimeInterval::unit);
    match network_of(run, d)? {
        Some(network) => {
            if d.window.is_some() {
                return Err(usage("--window and --network are mutually exclusive"));
            }
            Ok(SimDomain::Network { network, interval })
        }
        None => Ok(SimDomain::Planar { window: window_of(d.window)?.unwrap_or_else(SpatialWindow::unit), interval }),
    }
}

/// `name=path`, or a bare path whose file stem is the name.
fn covariate_spec(s: &str) -> CliResult<(String, PathBuf)> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        Some(_) => Err(usage(format!("malformed covariate `{s}`; expected name=path"))),
        None => {
            let path = PathBuf::from(s);
            let name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| usage(format!("cannot derive a covariate name from `{s}`")))?;
            Ok((name, path))
        }
    }
}

fn read_covariates(run: &mut Run, specs: &[String], base: Option<&Path>) -> CliResult<Vec<CovariateGrid>> {
    let mut out = Vec::with_capacity(specs.len());
    for s in specs {
        let (name, mut path) = covariate_spec(s)?;
        if let Some(b) = base {
            if path.is_relative() {
                path = b.join(path);
            }
        }
        run.input(&path)?;
        out.push(io::read_covariate_grid_file(&path, &name)?);
    }
    Ok(out)
}

fn intensity_values(run: &mut Run, path: &Path, n: usize) -> CliResult<Vec<f64>> {
    run.input(path)?;
    let v = io::read_values_file(path)?;
    if v.len() != n {
        return Err(usage(format!("intensity file has {} values for {n} events", v.len())));
    }
    Ok(v)
}

fn homogeneous(p: &PointPattern) -> Vec<f64> {
    vec![p.len() as f64 / p.volume(); p.len()]
}

/// Lag grid from flags, falling back to the defaults for `pattern`.
pub fn summary_config(pattern: &PointPattern, stat: Statistic, g: &GridArgs) -> SummaryConfig {
    let base = SummaryConfig::default_for(pattern, stat);
    let mut cfg = match (&g.r, &g.h) {
        (None, None) => base,
        (r, h) => SummaryConfig::new(
            r.as_ref().map_or(base.r.clone(), |v| v.0.clone()),
            h.as_ref().map_or(base.h.clone(), |v| v.0.clone()),
            stat,
        ),
    };
    if let Some([br, bh]) = g.bandwidths {
        cfg = cfg.with_bandwidths(br, bh);
    }
    if let Some(c) = g.correction {
        cfg = cfg.with_correction(match c {
            CorrectionArg::None => Correction::None,
            CorrectionArg::Translation => Correction::Translation,
        });
    }
    cfg.with_normalize(!g.no_normalize)
}

fn statistic(s: StatArg) -> Statistic {
    match s {
        StatArg::K => Statistic::K,
        StatArg::G => Statistic::G,
    }
}

fn family(f: FamilyArg) -> CovFamily {
    match f {
        FamilyArg::SepExp => CovFamily::SepExp,
        FamilyArg::Gneiting => CovFamily::gneiting(),
        FamilyArg::IacoCesare => CovFamily::iaco_cesare(),
    }
}

fn order(o: OrderArg) -> Order {
    match o {
        OrderArg::Global => Order::Global,
        OrderArg::Local => Order::Local,
    }
}

fn write_pattern(run: &Run, p: &PointPattern) -> CliResult<()> {
    let mut w = run.writer("pattern.csv")?;
    io::write_pattern_csv(p, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_values(run: &Run, file: &str, name: &str, v: &[f64]) -> CliResult<()> {
    let mut w = run.writer(file)?;
    io::write_values(name, v, &mut w)?;
    w.flush()?;
    Ok(())
}

fn simulate_poisson(cmd: &Command, a: &SimPoissonArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, Some(a.seed))?;
    let domain = sim_domain(&mut run, &a.domain)?;
    let covs = read_covariates(&mut run, &a.covariates, None)?;
    let spec = match a.lambda.trim().parse::<f64>() {
        Ok(v) if a.par.is_none() && covs.is_empty() => IntensitySpec::Constant(v),
        _ => IntensitySpec::expression(&a.lambda, a.par.as_ref().map_or(Vec::new(), |p| p.0.clone()), covs)?,
    };
    let sim = sim_poisson(&spec, &domain, a.seed)?;
    log::info!("{} events (lambda_max {})", sim.pattern.len(), sim.lambda_max);
    write_pattern(&run, &sim.pattern)?;
    run.finish()
}

fn simulate_etas(cmd: &Command, a: &SimEtasArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, Some(a.seed))?;
    let domain = sim_domain(&mut run, &a.domain)?;
    let mut params = EtasParams::from_vector(a.params, a.beta);
    params.m0 = a.m0;
    params.b = a.b;
    let sim = sim_etas(&params, &domain, a.seed)?;
    log::info!(
        "{} events, {} generations, branching ratio {}",
        sim.pattern.len(),
        sim.generations,
        sim.branching_ratio
    );
    write_pattern(&run, &sim.pattern)?;
    run.finish()
}

fn simulate_lgcp(cmd: &Command, a: &SimLgcpArgs) -> CliResult<()> {
    let run = Run::start(cmd, &a.out, Some(a.seed))?;
    let params = CovParams::new(a.sigma, a.alpha, a.beta).map_err(|e| usage(e.to_string()))?;
    let model = CovarianceModel::new(family(a.family), params).map_err(|e| usage(e.to_string()))?;
    let window = window_of(a.window)?.unwrap_or_else(SpatialWindow::unit);
    let interval = interval_of(a.time)?.unwrap_or_else(TimeInterval::unit);
    let sim = sim_lgcp(&model, a.lambda0, a.grid, window, interval, a.seed)?;
    log::info!("{} events", sim.pattern.len());
    write_pattern(&run, &sim.pattern)?;
    write_values(&run, "field.csv", "field", &sim.field)?;
    run.finish()
}

fn covariate(cmd: &Command, a: &CovariateArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, None)?;
    let spec = match (a.mult, a.dims) {
        (Some(m), None) => GridSpec::Mult(m),
        (None, Some([nx, ny, nt])) => GridSpec::Dims { nx, ny, nt },
        _ => return Err(usage("exactly one of --mult and --dims is required")),
    };
    if a.name.is_empty() || a.name.contains(['/', '\\']) {
        return Err(usage("covariate name must be a plain file name"));
    }
    run.input(&a.samples)?;
    let samples = io::read_covariate_samples(BufReader::new(File::open(&a.samples)?))?;
    let window = window_of(Some(a.window))?.expect("given");
    let interval = interval_of(Some(a.time))?.expect("given");
    let res = interpolate_idw(&samples, &a.name, spec, a.power, window, interval)?;
    let mut w = run.writer(&format!("{}.csv", a.name))?;
    io::write_covariate_grid(&res.grid, &mut w)?;
    w.flush()?;
    run.finish()
}

fn summary(cmd: &Command, a: &SummaryArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, None)?;
    if a.ids.is_some() && !a.local {
        return Err(usage("--ids requires --local"));
    }
    let p = read_pattern(&mut run, &a.pattern, &a.domain)?;
    let lambda = match &a.intensity {
        Some(path) => intensity_values(&mut run, path, p.len())?,
        None => homogeneous(&p),
    };
    let stat = statistic(a.stat);
    let cfg = summary_config(&p, stat, &a.grid);
    let label = if stat == Statistic::K { "K" } else { "g" };
    if a.local {
        let set = second_order_local(&p, &lambda, &cfg, a.ids.as_ref().map(|v| v.0.as_slice()))?;
        let mut w = run.writer("lista.csv")?;
        io::write_lista_csv(&set, &mut w)?;
        w.flush()?;
        if run.svg {
            for (id, s) in set.ids.iter().zip(&set.surfaces) {
                run.text(&format!("lista/{id}.svg"), &svg::surface_svg(s, &format!("local {label}, point {id}")))?;
            }
        }
    } else {
        let s = second_order_global(&p, &lambda, &cfg)?;
        let mut w = run.writer("surface.csv")?;
        io::write_surface_csv(&s, &mut w)?;
        w.flush()?;
        if run.svg {
            run.text("surface.svg", &svg::surface_svg(&s, label))?;
        }
    }
    run.finish()
}

/// Fit configuration file; flags given on the command line take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub formula: Option<String>,
    pub method: Option<Method>,
    pub nd: Option<[usize; 3]>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub covariates: Vec<String>,
    pub marked: Option<String>,
}

fn fit_poisson(cmd: &Command, a: &FitPoissonArgs) -> CliResult<()> {
    let c = &a.common;
    let mut run = Run::start(cmd, &c.out, None)?;
    let (config, config_dir) = match &a.config {
        Some(path) => {
            run.input(path)?;
            let cfg: FitConfig =
                serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (cfg, path.parent().map(Path::to_path_buf))
        }
        None => (FitConfig::default(), None),
    };
    let p = read_pattern(&mut run, &c.pattern, &c.domain)?;
    let mut covs = read_covariates(&mut run, &config.covariates, config_dir.as_deref())?;
    for g in read_covariates(&mut run, &c.covariates, None)? {
        covs.retain(|h| h.name != g.name);
        covs.push(g);
    }
    let formula_src = a.formula.clone().or(config.formula).unwrap_or_else(|| "~ 1".into());
    let formula = parse_formula(&formula_src)?;
    let opts = StppmOptions {
        method: match a.method {
            Some(MethodArg::Glm) => Method::Glm,
            Some(MethodArg::Lsr) => Method::Lsr,
            None => config.method.unwrap_or(Method::Glm),
        },
        nd: c.nd.or(config.nd),
        seed: c.seed.or(config.seed).unwrap_or(1),
        marked: a.marked.clone().or(config.marked),
        ridge: a.ridge,
    };
    run.manifest.seed = Some(opts.seed);
    let model = stppm(&p, &formula, &covs, &opts)?;
    run.json("model.json", &model)?;
    write_values(&run, "intensity.csv", "lambda", &model.fitted)?;
    run.finish()
}

fn fit_separable(cmd: &Command, a: &FitSeparableArgs) -> CliResult<()> {
    let seed = a.seed.unwrap_or(1);
    let mut run = Run::start(cmd, &a.out, Some(seed))?;
    let p = read_pattern(&mut run, &a.pattern, &a.domain)?;
    let covs = read_covariates(&mut run, &a.covariates, None)?;
    let fs_ = parse_formula(&a.space_formula)?;
    let ft = parse_formula(&a.time_formula)?;
    let opts = SeparableOptions { nd_space: a.nd_space, nd_time: a.nd_time, seed };
    let fit = sep_fit(&p, &fs_, &ft, &covs, &opts)?;
    run.json("model.json", &fit)?;
    write_values(&run, "intensity.csv", "lambda", &fit.fitted)?;
    run.finish()
}

fn fit_local(cmd: &Command, a: &FitLocalArgs) -> CliResult<()> {
    let c = &a.common;
    let seed = c.seed.unwrap_or(1);
    let mut run = Run::start(cmd, &c.out, Some(seed))?;
    let p = read_pattern(&mut run, &c.pattern, &c.domain)?;
    let covs = read_covariates(&mut run, &c.covariates, None)?;
    let formula = parse_formula(&a.formula)?;
    let opts = LocalOptions { h_s: a.hs, h_t: a.ht, nd: c.nd, seed };
    let fit = locstppm(&p, &formula, &covs, &opts)?;
    run.json("model.json", &fit)?;
    write_values(&run, "intensity.csv", "lambda", &fit.fitted)?;
    run.finish()
}

fn fit_lgcp(cmd: &Command, a: &FitLgcpArgs) -> CliResult<()> {
    let c = &a.common;
    let seed = c.seed.unwrap_or(1);
    let mut run = Run::start(cmd, &c.out, Some(seed))?;
    let p = read_pattern(&mut run, &c.pattern, &c.domain)?;
    let covs = read_covariates(&mut run, &c.covariates, None)?;
    let formula = parse_formula(&a.formula)?;
    let opts = LgcpOptions {
        first: order(a.first),
        second: order(a.second),
        family: family(a.family),
        seed,
        summary: Some(summary_config(&p, Statistic::G, &a.grid)),
        nd: c.nd,
        h_s: a.hs,
        h_t: a.ht,
    };
    let fit = stlgcppm(&p, &formula, &covs, &opts)?;
    run.json("model.json", &fit)?;
    write_values(&run, "intensity.csv", "lambda", &fit.fitted)?;
    print!("{fit}");
    // The file copy leaves out the wall-clock line so reruns are byte-identical.
    let mut untimed = fit.clone();
    untimed.elapsed_seconds = f64::NAN;
    run.text("report.txt", &untimed.to_string())?;
    run.finish()
}

fn diagnose_inputs(run: &mut Run, a: &DiagnoseArgs) -> CliResult<(PointPattern, Vec<f64>, SummaryConfig)> {
    let p = read_pattern(run, &a.pattern, &a.domain)?;
    let lambda = intensity_values(run, &a.intensity, p.len())?;
    let cfg = summary_config(&p, Statistic::K, &a.grid);
    Ok((p, lambda, cfg))
}

fn diagnose_global(cmd: &Command, a: &DiagnoseArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, None)?;
    let (p, lambda, cfg) = diagnose_inputs(&mut run, a)?;
    let res = globaldiag(&p, &lambda, Some(&cfg))?;
    let mut w = run.writer("ksurface.csv")?;
    io::write_surface_csv(&res.surface, &mut w)?;
    w.flush()?;
    run.json("diag.json", &serde_json::json!({ "sum_sq": res.sum_sq, "difference": res.difference }))?;
    if run.svg {
        run.text("ksurface.svg", &svg::surface_svg(&res.surface, "K"))?;
        run.text("difference.svg", &svg::heatmap(&res.surface.r, &res.surface.h, &res.difference, "K - K theoretical"))?;
    }
    println!("{res}");
    run.finish()
}

fn diagnose_local(cmd: &Command, a: &DiagnoseLocalArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.base.out, None)?;
    let (p, lambda, cfg) = diagnose_inputs(&mut run, &a.base)?;
    let res = localdiag(&p, &lambda, a.p, Some(&cfg))?;
    let mut w = run.writer("lista.csv")?;
    io::write_lista_csv(&res.lista, &mut w)?;
    w.flush()?;
    run.json(
        "diag.json",
        &serde_json::json!({
            "p": res.p,
            "threshold": res.threshold,
            "flagged": res.flagged,
            "scores": res.scores,
        }),
    )?;
    for (id, s) in infl(&res, a.ids.as_ref().map(|v| v.0.as_slice()))? {
        let mut w = run.writer(&format!("infl/{id}.csv"))?;
        io::write_surface_csv(s, &mut w)?;
        w.flush()?;
        run.text(&format!("infl/{id}.svg"), &svg::surface_svg(s, &format!("local K, point {id}")))?;
    }
    println!("{res}");
    run.finish()
}

fn test_local(cmd: &Command, a: &LocalTestArgs) -> CliResult<()> {
    let mut run = Run::start(cmd, &a.out, Some(a.seed))?;
    let x = read_pattern(&mut run, &a.background, &a.domain)?;
    let z = read_pattern(&mut run, &a.alt, &a.domain)?;
    let stat = statistic(a.method);
    let opts = LocalTestOptions {
        method: stat,
        k: a.k,
        alpha: a.alpha,
        seed: a.seed,
        scheme: match a.scheme {
            SchemeArg::Relabel => NullScheme::Relabel,
            SchemeArg::Subsample => NullScheme::Subsample,
        },
        summary: Some(summary_config(&x, stat, &a.grid)),
    };
    let res = localtest(&x, &z, &opts)?;
    run.json("localtest.json", &res)?;
    println!("{res}");
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariate_names() {
        assert_eq!(covariate_spec("elev=/a/b.csv").unwrap(), ("elev".into(), PathBuf::from("/a/b.csv")));
        assert_eq!(covariate_spec("data/slope.csv").unwrap(), ("slope".into(), PathBuf::from("data/slope.csv")));
        assert!(matches!(covariate_spec("=x.csv"), Err(CliError::Usage(_))));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["stpp", "bogus"]), 2);
        assert_eq!(run(["stpp", "simulate", "poisson", "--lambda", "1", "-o", "x"]), 2);
        assert_eq!(run(["stpp", "--help"]), 0);
    }
}
