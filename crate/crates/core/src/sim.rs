//! Contaminated-Gaussian simulation study and empirical breakdown runs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::GaussianModel;
use crate::location::DEFAULT_LTS_STEPS;
use crate::radial::RadialMethod;
use crate::rng::{self, DEFAULT_SEED};
use crate::scatter::{self, gsscm, LocationMode};
use crate::spectrum::EigenSetting;

pub const DEFAULT_REPLICATIONS: usize = 200;
pub const DEFAULT_EPS: [f64; 3] = [0.0, 0.2, 0.4];
pub const DEFAULT_GAMMAS: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
pub const STUDY_METHODS: [RadialMethod; 6] = [
    RadialMethod::Sscm,
    RadialMethod::Winsor,
    RadialMethod::Quad,
    RadialMethod::Ball,
    RadialMethod::Shell,
    RadialMethod::Lr,
];

const BREAKDOWN_STREAM: u64 = 0xB4EA_D0;

/// One cell of the study: a covariance setting and a point-mass contamination.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub setting: EigenSetting,
    pub eps: f64,
    pub gamma: f64,
    pub replications: usize,
    pub methods: Vec<RadialMethod>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n < self.p + 1 {
            return Err(Error::Config(format!("need n >= p + 1 and p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        if !(0.0..0.5).contains(&self.eps) {
            return Err(Error::Config(format!("eps must lie in [0, 0.5), got {}", self.eps)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be finite, got {}", self.gamma)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_contaminated(&self) -> usize {
        contaminated_count(self.n, self.eps)
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.setting.eigenvalues(self.p)))
    }
}

fn contaminated_count(n: usize, eps: f64) -> usize {
    // guard against 0.2 * 100 = 20.000000000000004
    (eps * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Replication `rep` of a cell: `N(0, Sigma)` rows whose last `ceil(eps n)`
/// rows are replaced by `(0, ..., 0, gamma)`.
///
/// The Gaussian part depends only on `(seed, rep)` and the dimensions, so
/// all settings and contamination levels share the same underlying draws.
pub fn generate(config: &SimConfig, rep: usize) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (n, p) = (config.n, config.p);
    let sd: Vec<f64> = config.setting.eigenvalues(p).iter().map(|l| l.sqrt()).collect();
    let mut rng = rng::stream(config.seed, &[rep as u64]);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = z * sd[j];
        }
    }
    for i in n - config.n_contaminated()..n {
        x.row_mut(i).fill(0.0);
        x[(i, p - 1)] = config.gamma;
    }
    Ok(x)
}

fn whitened_eigenvalues(s_hat: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    if s_hat.shape() != sigma.shape() || !s_hat.is_square() {
        return Err(Error::DimensionMismatch { expected: sigma.nrows(), found: s_hat.nrows() });
    }
    let l = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.unpack();
    let a = l.solve_lower_triangular(s_hat).ok_or(Error::NotPositiveDefinite)?;
    let m = l.solve_lower_triangular(&a.transpose()).ok_or(Error::NotPositiveDefinite)?;
    let m = (&m + m.transpose()) * 0.5;
    let mu = m.symmetric_eigenvalues();
    if mu.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(mu)
}

/// `tr(S Sigma^-1) - ln det(S Sigma^-1) - p`.
pub fn kldiv(s_hat: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let mu = whitened_eigenvalues(s_hat, sigma)?;
    Ok(mu.iter().map(|m| m - m.ln() - 1.0).sum::<f64>().max(0.0))
}

/// [`kldiv`] between the determinant-one shape matrices.
pub fn kldivshape(s_hat: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let shape = |m: &DMatrix<f64>| {
        scatter::shape(m).map_err(|e| match e {
            Error::SingularScatter { .. } => Error::NotPositiveDefinite,
            other => other,
        })
    };
    kldiv(&shape(s_hat)?, &shape(sigma)?)
}

/// The full grid, as read from a study config file.
///
/// ```toml
/// n = 100
/// p = 10
/// settings = ["constant", "linear", "quadratic"]
/// eps = [0.0, 0.2, 0.4]
/// gammas = [0.5, 1, 2, 4, 8, 16, 32, 64]
/// replications = 200
/// methods = ["sscm", "winsor", "quad", "ball", "shell", "lr"]
/// seed = 20180517
/// normalize = true
/// lts_steps = 5
/// ```
///
/// Every key is optional. Cells with `eps = 0` are run once, with `gamma = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n: usize,
    pub p: usize,
    pub settings: Vec<EigenSetting>,
    pub eps: Vec<f64>,
    pub gammas: Vec<f64>,
    pub replications: usize,
    pub methods: Vec<RadialMethod>,
    pub seed: u64,
    /// Divide each estimate by its Gaussian consistency factor.
    pub normalize: bool,
    pub lts_steps: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n: 100,
            p: 10,
            settings: EigenSetting::ALL.to_vec(),
            eps: DEFAULT_EPS.to_vec(),
            gammas: DEFAULT_GAMMAS.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            methods: STUDY_METHODS.to_vec(),
            seed: DEFAULT_SEED,
            normalize: true,
            lts_steps: DEFAULT_LTS_STEPS,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Cells in canonical order: setting, then eps, then gamma.
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &setting in &self.settings {
            for &eps in &self.eps {
                let gammas = if eps == 0.0 { vec![0.0] } else { self.gammas.clone() };
                for gamma in gammas {
                    out.push(SimConfig {
                        n: self.n,
                        p: self.p,
                        setting,
                        eps,
                        gamma,
                        replications: self.replications,
                        methods: self.methods.clone(),
                        seed: self.seed,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() || self.eps.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("settings, eps and methods must be non-empty".into()));
        }
        if self.eps.iter().any(|&e| e > 0.0) && self.gammas.is_empty() {
            return Err(Error::Config("contaminated cells need at least one gamma".into()));
        }
        self.cells().iter().try_for_each(SimConfig::validate)
    }
}

/// One replication of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub kldiv: f64,
    pub kldivshape: f64,
}

/// Per-replication outcomes of one cell, `None` where the estimator failed.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: SimConfig,
    pub by_method: Vec<(RadialMethod, Vec<Option<Divergence>>)>,
}

impl CellOutcome {
    pub fn values(&self, method: RadialMethod) -> Option<&[Option<Divergence>]> {
        self.by_method.iter().find(|(m, _)| *m == method).map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRecord {
    pub method: RadialMethod,
    pub setting: EigenSetting,
    pub eps: f64,
    pub gamma: f64,
    pub mean_kldiv: f64,
    pub mean_kldivshape: f64,
    pub n_fail: usize,
    pub replications: usize,
    pub seed: u64,
}

/// Gaussian consistency factor of each method at dimension `p`.
pub fn consistency_factors(methods: &[RadialMethod], p: usize) -> Result<Vec<f64>> {
    let model = GaussianModel::new(p)?;
    Ok(methods.iter().map(|&m| model.consistency_factor(m)).collect())
}

/// Runs every replication of every cell and keeps the individual results.
///
/// The k-step LTS location of each dataset is computed once and shared by
/// all methods.
pub fn run_study_detailed(config: &StudyConfig) -> Result<Vec<CellOutcome>> {
    config.validate()?;
    let cells = config.cells();
    let factors = if config.normalize {
        consistency_factors(&config.methods, config.p)?
    } else {
        vec![1.0; config.methods.len()]
    };
    let sigmas: Vec<DMatrix<f64>> = cells.iter().map(SimConfig::sigma).collect();
    let per_rep: Vec<Vec<Vec<Option<Divergence>>>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            cells
                .iter()
                .zip(&sigmas)
                .map(|(cell, sigma)| replicate(cell, rep, sigma, &factors, config.lts_steps))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(cells
        .into_iter()
        .enumerate()
        .map(|(c, cell)| {
            let by_method = cell
                .methods
                .iter()
                .enumerate()
                .map(|(m, &method)| (method, per_rep.iter().map(|r| r[c][m]).collect()))
                .collect();
            CellOutcome { cell, by_method }
        })
        .collect())
}

fn replicate(
    cell: &SimConfig,
    rep: usize,
    sigma: &DMatrix<f64>,
    factors: &[f64],
    lts_steps: usize,
) -> Result<Vec<Option<Divergence>>> {
    let x = generate(cell, rep)?;
    let location = match LocationMode::KStepLts(lts_steps).locate(&x) {
        Ok(t) => LocationMode::Fixed(t),
        Err(_) => return Ok(vec![None; cell.methods.len()]),
    };
    Ok(cell
        .methods
        .iter()
        .zip(factors)
        .map(|(&method, &factor)| {
            let est = gsscm(&x, method, &location).ok()?;
            let s = est.matrix / factor;
            Some(Divergence { kldiv: kldiv(&s, sigma).ok()?, kldivshape: kldivshape(&s, sigma).ok()? })
        })
        .collect())
}

/// Mean divergences per cell and method, failures excluded and counted.
pub fn summarize(outcomes: &[CellOutcome]) -> Vec<SimRecord> {
    let mut out = Vec::new();
    for o in outcomes {
        for (method, values) in &o.by_method {
            let ok: Vec<Divergence> = values.iter().flatten().copied().collect();
            let k = ok.len() as f64;
            out.push(SimRecord {
                method: *method,
                setting: o.cell.setting,
                eps: o.cell.eps,
                gamma: o.cell.gamma,
                mean_kldiv: ok.iter().map(|d| d.kldiv).sum::<f64>() / k,
                mean_kldivshape: ok.iter().map(|d| d.kldivshape).sum::<f64>() / k,
                n_fail: values.len() - ok.len(),
                replications: values.len(),
                seed: o.cell.seed,
            });
        }
    }
    out
}

pub fn run_study(config: &StudyConfig) -> Result<Vec<SimRecord>> {
    Ok(summarize(&run_study_detailed(config)?))
}

/// How the replaced observations are positioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// All at `magnitude * e_p`.
    PointMass,
    /// On a ray from the mean of the kept points along `e_p`, at
    /// `magnitude * (R + j)` with `R` two more than the radius of the kept
    /// points: outside their hull, at least `magnitude` from each of them and
    /// from each other.
    Spread,
}

impl std::str::FromStr for Placement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" | "point_mass" => Ok(Placement::PointMass),
            "spread" => Ok(Placement::Spread),
            _ => Err(Error::InvalidArgument(format!("unknown placement {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakdownResult {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub trace: f64,
    /// Distance between the k-step LTS centers of the contaminated and the
    /// clean data.
    pub location_shift: f64,
}

/// Clean `N(0, I_p)` data whose last `m` rows are replaced according to
/// `placement`; reports the raw (unnormalized) estimate.
pub fn breakdown_experiment(
    n: usize,
    p: usize,
    m: usize,
    magnitude: f64,
    method: RadialMethod,
    seed: u64,
    placement: Placement,
) -> Result<BreakdownResult> {
    if m >= n {
        return Err(Error::InvalidArgument(format!("cannot replace m = {m} of n = {n} observations")));
    }
    if !magnitude.is_finite() {
        return Err(Error::InvalidArgument("magnitude must be finite".into()));
    }
    let mut rng = rng::stream(seed, &[BREAKDOWN_STREAM, n as u64, p as u64]);
    let clean = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = clean.clone();
    if m > 0 {
        let kept = clean.rows(0, n - m);
        let center = kept.row_mean();
        let radius = kept.row_iter().map(|r| (r - &center).norm()).fold(0.0, f64::max);
        for (j, i) in (n - m..n).enumerate() {
            match placement {
                Placement::PointMass => {
                    x.row_mut(i).fill(0.0);
                    x[(i, p - 1)] = magnitude;
                }
                Placement::Spread => {
                    x.set_row(i, &center);
                    x[(i, p - 1)] += magnitude * (radius + 2.0 + j as f64);
                }
            }
        }
    }
    let location = LocationMode::default();
    let est = gsscm(&x, method, &location)?;
    let shift = if m == 0 { 0.0 } else { (&est.location - location.locate(&clean)?).norm() };
    Ok(BreakdownResult {
        lambda_max: est.eigenvalues[0],
        lambda_min: est.eigenvalues[p - 1],
        trace: est.matrix.trace(),
        location_shift: shift,
    })
}
