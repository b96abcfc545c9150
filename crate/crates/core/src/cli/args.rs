use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
        .collect()
}

fn fixed<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = list(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

pub(crate) fn parse_window(s: &str) -> Result<[f64; 4], String> {
    fixed::<4>(s)
}

pub(crate) fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    fixed::<2>(s)
}

pub(crate) fn parse_six(s: &str) -> Result<[f64; 6], String> {
    fixed::<6>(s)
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

/// Comma-separated 1-based ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IdList(pub Vec<usize>);

pub(crate) fn parse_list(s: &str) -> Result<NumList, String> {
    list(s).map(NumList)
}

pub(crate) fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a positive integer")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<usize>| format!("expected 3 comma-separated integers, got {}", v.len()))
}

pub(crate) fn parse_dims2(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a positive integer")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<usize>| format!("expected 2 comma-separated integers, got {}", v.len()))
}

pub(crate) fn parse_ids(s: &str) -> Result<IdList, String> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not an id")))
        .collect::<Result<_, _>>()
        .map(IdList)
}

#[derive(Debug, Parser)]
#[command(name = "stpp", version, about = "Spatio-temporal point pattern analysis")]
pub struct Cli {
    /// Worker threads (falls back to STPP_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log informational messages as well as warnings.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate a point pattern.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Interpolate scattered covariate samples onto a grid.
    Covariate(CovariateArgs),
    /// Global or local K / pair correlation surfaces.
    Summary(SummaryArgs),
    /// Fit a model.
    #[command(subcommand)]
    Fit(FitCmd),
    /// Goodness-of-fit diagnostics for a fitted intensity.
    #[command(subcommand)]
    Diagnose(DiagnoseCmd),
    /// Hypothesis tests.
    #[command(subcommand)]
    Test(TestCmd),
}

#[derive(Debug, Args, Serialize)]
pub struct DomainArgs {
    /// Spatial window `x0,x1,y0,y1`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<[f64; 4]>,
    /// Time interval `t0,t1`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub time: Option<[f64; 2]>,
    /// Linear network JSON; events live on it.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(short = 'o', long = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also write SVG heatmaps.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateCmd {
    /// Poisson process by thinning.
    Poisson(SimPoissonArgs),
    /// Epidemic-type aftershock sequence.
    Etas(SimEtasArgs),
    /// Log-Gaussian Cox process on a regular grid.
    Lgcp(SimLgcpArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SimPoissonArgs {
    /// Constant intensity or an expression in x, y, t and a[k].
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    /// Expression parameters `a[1],a[2],...`.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub par: Option<NumList>,
    /// Covariate grid `name=path` usable in the expression.
    #[arg(long = "covariate")]
    pub covariates: Vec<String>,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimEtasArgs {
    /// `mu,k0,c,p,d,q`.
    #[arg(long, value_parser = parse_six)]
    pub params: [f64; 6],
    /// Magnitude productivity exponent.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Magnitude threshold.
    #[arg(long, default_value_t = 2.5, allow_hyphen_values = true)]
    pub m0: f64,
    /// Gutenberg–Richter b-value.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    SepExp,
    Gneiting,
    IacoCesare,
}

#[derive(Debug, Args, Serialize)]
pub struct SimLgcpArgs {
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Baseline intensity.
    #[arg(long)]
    pub lambda0: f64,
    /// Cells `gx,gy,gt`.
    #[arg(long, value_parser = parse_dims)]
    pub grid: [usize; 3],
    #[arg(long, value_enum, default_value = "sep-exp")]
    pub family: FamilyArg,
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<[f64; 4]>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub time: Option<[f64; 2]>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CovariateArgs {
    /// Samples CSV with header `x,y,t,value`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Covariate name (output file `<name>.csv`).
    #[arg(long)]
    pub name: String,
    /// Nodes per axis `ceil(mult · J^(1/3))`.
    #[arg(long, conflicts_with = "dims")]
    pub mult: Option<f64>,
    /// Explicit nodes `nx,ny,nt`.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    #[arg(long, default_value_t = 2.0)]
    pub power: f64,
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: [f64; 4],
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub time: [f64; 2],
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
pub enum StatArg {
    K,
    G,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionArg {
    None,
    Translation,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Spatial lags `r1,r2,...`.
    #[arg(long, value_parser = parse_list)]
    pub r: Option<NumList>,
    /// Temporal lags `h1,h2,...`.
    #[arg(long, value_parser = parse_list)]
    pub h: Option<NumList>,
    /// pcf kernel half-widths `b_r,b_h`.
    #[arg(long, value_parser = parse_pair)]
    pub bandwidths: Option<[f64; 2]>,
    #[arg(long, value_enum)]
    pub correction: Option<CorrectionArg>,
    /// Divide by Σ 1/λ instead of the domain volume.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SummaryArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Intensity at each event, one per row; homogeneous when absent.
    #[arg(long)]
    pub intensity: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "k", ignore_case = true)]
    pub stat: StatArg,
    /// Per-event (LISTA) surfaces instead of the global one.
    #[arg(long)]
    pub local: bool,
    /// 1-based event ids for `--local`.
    #[arg(long, value_parser = parse_ids)]
    pub ids: Option<IdList>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Glm,
    Lsr,
}

#[derive(Debug, Args, Serialize)]
pub struct FitCommon {
    #[arg(long)]
    pub pattern: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Covariate grid CSV, as `name=path` or a path (name = file stem).
    #[arg(long = "covariate")]
    pub covariates: Vec<String>,
    /// Dummy grid `nx,ny,nt`.
    #[arg(long, value_parser = parse_dims)]
    pub nd: Option<[usize; 3]>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitCmd {
    /// Log-linear Poisson model by cubature.
    Poisson(FitPoissonArgs),
    /// Product of spatial and temporal marginal fits.
    Separable(FitSeparableArgs),
    /// Kernel-weighted local Poisson fits, one per event.
    LocalPoisson(FitLocalArgs),
    /// Log-Gaussian Cox process by minimum contrast.
    Lgcp(FitLgcpArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct FitPoissonArgs {
    #[command(flatten)]
    pub common: FitCommon,
    /// Fit configuration JSON; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Categorical mark given per-type intercepts.
    #[arg(long)]
    pub marked: Option<String>,
    /// Ridge penalty on the per-type contrasts.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitSeparableArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long = "covariate")]
    pub covariates: Vec<String>,
    #[arg(long, default_value = "~ 1")]
    pub space_formula: String,
    #[arg(long, default_value = "~ 1")]
    pub time_formula: String,
    /// Spatial cells `nx,ny`.
    #[arg(long, value_parser = parse_dims2)]
    pub nd_space: Option<[usize; 2]>,
    #[arg(long)]
    pub nd_time: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FitLocalArgs {
    #[command(flatten)]
    pub common: FitCommon,
    #[arg(long, default_value = "~ 1")]
    pub formula: String,
    /// Spatial bandwidth (Silverman when absent).
    #[arg(long)]
    pub hs: Option<f64>,
    /// Temporal bandwidth (Silverman when absent).
    #[arg(long)]
    pub ht: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderArg {
    Global,
    Local,
}

#[derive(Debug, Args, Serialize)]
pub struct FitLgcpArgs {
    #[command(flatten)]
    pub common: FitCommon,
    #[arg(long, default_value = "~ 1")]
    pub formula: String,
    #[arg(long, value_enum, default_value = "global")]
    pub first: OrderArg,
    #[arg(long, value_enum, default_value = "global")]
    pub second: OrderArg,
    #[arg(long, value_enum, default_value = "sep-exp")]
    pub family: FamilyArg,
    #[arg(long)]
    pub hs: Option<f64>,
    #[arg(long)]
    pub ht: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnoseCmd {
    /// Weighted K-function against its Poisson value.
    Global(DiagnoseArgs),
    /// Per-event LISTA discrepancies and outlying points.
    Local(DiagnoseLocalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Fitted intensity at each event, one per row.
    #[arg(long)]
    pub intensity: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseLocalArgs {
    #[command(flatten)]
    pub base: DiagnoseArgs,
    /// Percentile above which points are flagged.
    #[arg(short, long, default_value_t = 0.95)]
    pub p: f64,
    /// Emit surfaces for these ids instead of the flagged ones.
    #[arg(long, value_parser = parse_ids)]
    pub ids: Option<IdList>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestCmd {
    /// Local permutation test of X against Z.
    Local(LocalTestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Relabel,
    Subsample,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalTestArgs {
    #[arg(long)]
    pub background: PathBuf,
    #[arg(long)]
    pub alt: PathBuf,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, value_enum, default_value = "k", ignore_case = true)]
    pub method: StatArg,
    #[arg(long, default_value_t = 99)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "relabel")]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}
