//! Batch command line front end.
//!
//! Every failure is reported on stderr as `error[<code>]: <message>` and maps
//! to an exit status: 1 for usage errors, 2 for data errors and 3 for
//! numerical failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use crate::coga::{self, MadScaling, WhRow};
use crate::error::{Error, Result};
use crate::influence::{self, Direction, GaussianModel};
use crate::io::{read_csv_path, write_matrix, write_records};
use crate::location::DEFAULT_LTS_STEPS;
use crate::pca::{self, PcaOptions};
use crate::radial::RadialMethod;
use crate::rng::DEFAULT_SEED;
use crate::scatter::{gsscm, LocationMode};
use crate::sim::{self, Placement, StudyConfig};
use crate::spectrum::EigenSetting;

#[derive(Debug, Parser)]
#[command(name = "gsscm", version, about = "Generalized spatial sign covariance matrices")]
pub struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scatter matrix of a data file.
    Estimate(EstimateArgs),
    /// Robust principal components, scores and outlier map.
    Pca(PcaArgs),
    /// Contaminated-Gaussian simulation study.
    Simulate(SimulateArgs),
    /// Bivariate influence functions along a contamination path.
    Influence(InfluenceArgs),
    /// Accuracy of normal-quantile transforms for the Q3 cutoff.
    CogaCheck(CogaArgs),
    /// Scatter estimate under replacement contamination.
    Breakdown(BreakdownArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocationArg {
    Lts,
    Spatial,
    Mean,
    Fixed(Vec<f64>),
}

impl FromStr for LocationArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lts" => Ok(LocationArg::Lts),
            "spatial" => Ok(LocationArg::Spatial),
            "mean" => Ok(LocationArg::Mean),
            _ => {
                let list = s.strip_prefix("fixed=").ok_or_else(|| {
                    format!("expected lts, spatial, mean or fixed=v1,v2,..., got {s:?}")
                })?;
                list.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad coordinate {v:?}")))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map(LocationArg::Fixed)
            }
        }
    }
}

impl LocationArg {
    fn mode(&self, k: usize) -> LocationMode {
        match self {
            LocationArg::Lts => LocationMode::KStepLts(k),
            LocationArg::Spatial => LocationMode::SpatialMedian,
            LocationArg::Mean => LocationMode::Mean,
            LocationArg::Fixed(v) => LocationMode::Fixed(DVector::from_vec(v.clone())),
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<RadialMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_placement(s: &str) -> std::result::Result<Placement, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_setting(s: &str) -> std::result::Result<EigenSetting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_parser = parse_method, default_value = "lr")]
    pub method: RadialMethod,
    #[arg(long, default_value = "lts")]
    pub location: LocationArg,
    /// Number of C-steps for the LTS location.
    #[arg(long, default_value_t = DEFAULT_LTS_STEPS)]
    pub k: usize,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Divide by the Gaussian consistency factor.
    #[arg(long, value_enum, default_value = "off")]
    pub normalize: Switch,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long, value_parser = parse_method, default_value = "lr")]
    pub method: RadialMethod,
    #[arg(long)]
    pub location: Option<LocationArg>,
    #[arg(long, default_value_t = DEFAULT_LTS_STEPS)]
    pub k: usize,
    #[arg(long)]
    pub components: usize,
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving scores.csv, loadings.csv and outlier_map.csv;
    /// the outlier map goes to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML study description; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, value_enum)]
    pub normalize: Option<Switch>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: RadialMethod,
    /// `diag` for (z, z), `axis` for (z, 0).
    #[arg(long, value_parser = parse_direction, default_value = "diag")]
    pub direction: Direction,
    #[arg(long, default_value_t = 0.0)]
    pub z_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub z_max: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub normalize: Switch,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CogaArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5, 10, 20])]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_setting, default_values = ["constant", "linear", "quadratic"])]
    pub settings: Vec<EigenSetting>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Use the raw MAD instead of the 1.4826-scaled one.
    #[arg(long)]
    pub raw_mad: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BreakdownArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Number of replaced observations.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1e8)]
    pub magnitude: f64,
    #[arg(long, value_parser = parse_method, default_value = "lr")]
    pub method: RadialMethod,
    #[arg(long, value_parser = parse_placement, default_value = "spread")]
    pub placement: Placement,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let msg = e.to_string();
                let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
                eprintln!("error[usage]: {first}");
                return 1;
            }
            let _ = e.print();
            return 0;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e);
            e.kind().exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::Numeric(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Pca(a) => run_pca(a),
        Command::Simulate(a) => simulate(a),
        Command::Influence(a) => run_influence(a),
        Command::CogaCheck(a) => coga_check(a),
        Command::Breakdown(a) => breakdown(a),
    })
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct EstimateJson {
    method: RadialMethod,
    matrix: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    location: Vec<f64>,
    consistency_factor: f64,
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let x = read_csv_path(&a.input)?.data;
    let mut est = gsscm(&x, a.method, &a.location.mode(a.k))?;
    let factor = if a.normalize.on() { GaussianModel::new(x.ncols())?.consistency_factor(a.method) } else { 1.0 };
    est = est.scaled(factor);
    let mut out = sink(a.output.as_deref())?;
    match a.format {
        Format::Csv => write_matrix(&mut out, &est.matrix, None)?,
        Format::Json => {
            let doc = EstimateJson {
                method: a.method,
                matrix: est.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
                eigenvalues: est.eigenvalues.iter().copied().collect(),
                location: est.location.iter().copied().collect(),
                consistency_factor: factor,
            };
            let line = serde_json::to_string(&doc).map_err(|e| Error::Numeric(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run_pca(a: PcaArgs) -> Result<()> {
    let table = read_csv_path(&a.input)?;
    let mut options = PcaOptions::for_method(a.method);
    if let Some(loc) = &a.location {
        options.location = loc.mode(a.k);
    } else if let LocationMode::KStepLts(_) = options.location {
        options.location = LocationMode::KStepLts(a.k);
    }
    let model = pca::fit_pca_with(&table.data, a.components, a.method, &options)?;
    let map = pca::outlier_map_for(&model, &table.data)?;
    match &a.output {
        None => write_records(sink(None)?, &map)?,
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let names: Vec<String> = (1..=a.components).map(|j| format!("pc{j}")).collect();
            let scores = pca::scores(&model, &table.data)?;
            write_matrix(sink(Some(&dir.join("scores.csv")))?, &scores, Some(&names))?;
            write_matrix(sink(Some(&dir.join("loadings.csv")))?, &model.loadings, Some(&names))?;
            write_records(sink(Some(&dir.join("outlier_map.csv")))?, &map)?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(r) = a.replications {
        config.replications = r;
    }
    if let Some(s) = a.normalize {
        config.normalize = s.on();
    }
    let records = sim::run_study(&config)?;
    write_records(sink(a.output.as_deref())?, &records)
}

fn run_influence(a: InfluenceArgs) -> Result<()> {
    if a.steps < 2 || !(a.z_max > a.z_min) {
        return Err(Error::InvalidArgument("need --steps >= 2 and --z-max > --z-min".into()));
    }
    let h = (a.z_max - a.z_min) / (a.steps - 1) as f64;
    let z: Vec<f64> = (0..a.steps).map(|i| a.z_min + h * i as f64).collect();
    let rows = influence::if_grid(a.method, a.direction, &z, a.normalize.on())?;
    write_records(sink(a.output.as_deref())?, &rows)
}

fn coga_check(a: CogaArgs) -> Result<()> {
    let scaling = if a.raw_mad { MadScaling::Raw } else { MadScaling::Consistent };
    let mut rows: Vec<WhRow> = Vec::new();
    for &setting in &a.settings {
        rows.extend(coga::wh_experiment(&a.dims, setting, a.samples, a.seed, scaling)?);
    }
    write_records(sink(a.output.as_deref())?, &rows)
}

#[derive(Serialize)]
struct BreakdownRow {
    n: usize,
    p: usize,
    m: usize,
    magnitude: f64,
    method: RadialMethod,
    placement: Placement,
    seed: u64,
    lambda_max: f64,
    lambda_min: f64,
    trace: f64,
    location_shift: f64,
}

fn breakdown(a: BreakdownArgs) -> Result<()> {
    let r = sim::breakdown_experiment(a.n, a.p, a.m, a.magnitude, a.method, a.seed, a.placement)?;
    let row = BreakdownRow {
        n: a.n,
        p: a.p,
        m: a.m,
        magnitude: a.magnitude,
        method: a.method,
        placement: a.placement,
        seed: a.seed,
        lambda_max: r.lambda_max,
        lambda_min: r.lambda_min,
        trace: r.trace,
        location_shift: r.location_shift,
    };
    write_records(sink(a.output.as_deref())?, &[row])
}
