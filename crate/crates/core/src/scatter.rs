//! Generalized spatial sign covariance matrices.
//!
//! For a location `T` and a radial function `xi`, the estimator is
//!
//! ```text
//! S = (1/n) sum_i xi(|x_i - T|)^2 (x_i - T)(x_i - T)^T
//! ```
//!
//! with the cutoffs of `xi` computed from the distances `|x_i - T|`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{ChiSquared, Distribution};

use crate::error::{Error, Result};
use crate::location::{self, CSteps, DEFAULT_LTS_STEPS};
use crate::radial::{compute_cutoffs, Cutoffs, RadialMethod};
use crate::rng;

/// Sample size of the calibration draw used for population cutoffs.
pub const CALIBRATION_SAMPLES: usize = 1_000_000;
/// Default Monte Carlo size for [`consistency_factor`].
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

const SYMMETRY_TOL: f64 = 1e-10;
const EIGEN_FLOOR: f64 = 1e-10;

/// Location estimate the scatter is centered at.
#[derive(Debug, Clone, PartialEq)]
pub enum LocationMode {
    KStepLts(usize),
    SpatialMedian,
    Fixed(DVector<f64>),
    Mean,
}

impl Default for LocationMode {
    fn default() -> Self {
        LocationMode::KStepLts(DEFAULT_LTS_STEPS)
    }
}

impl LocationMode {
    pub fn locate(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            LocationMode::KStepLts(k) => Ok(location::kstep_lts(x, CSteps::Fixed(*k))?.center),
            LocationMode::SpatialMedian => Ok(location::spatial_median(
                x,
                location::DEFAULT_TOL,
                location::DEFAULT_MAX_ITER,
            )?
            .center),
            LocationMode::Fixed(v) => {
                if v.len() != x.ncols() {
                    return Err(Error::DimensionMismatch { expected: x.ncols(), found: v.len() });
                }
                Ok(v.clone())
            }
            LocationMode::Mean => location::mean(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterEstimate {
    pub matrix: DMatrix<f64>,
    /// Sorted in descending order.
    pub eigenvalues: DVector<f64>,
    /// Columns aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub location: DVector<f64>,
    pub method: RadialMethod,
    /// `None` for the classical and SSCM methods, which have no cutoffs.
    pub cutoffs: Option<Cutoffs>,
}

impl ScatterEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Divides the matrix and eigenvalues by `factor`, typically the
    /// consistency factor of the method.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.matrix /= factor;
        self.eigenvalues /= factor;
        self
    }

    pub fn shape(&self) -> Result<DMatrix<f64>> {
        shape(&self.matrix)
    }
}

/// GSSCM of `x` around the location selected by `location_mode`.
pub fn gsscm(
    x: &DMatrix<f64>,
    method: RadialMethod,
    location_mode: &LocationMode,
) -> Result<ScatterEstimate> {
    check_size(x.nrows(), x.ncols(), method)?;
    let center = location_mode.locate(x)?;
    let mut centered = x.clone();
    for mut r in centered.row_iter_mut() {
        r -= center.transpose();
    }
    from_centered(centered, method, center)
}

/// GSSCM of the pairwise differences `x_i - x_j`, `i < j`, around zero.
/// Needs no location estimate; the SSCM version is Kendall's tau matrix.
pub fn symmetrized_gsscm(x: &DMatrix<f64>, method: RadialMethod) -> Result<ScatterEstimate> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, required: 2 });
    }
    let pairs = n * (n - 1) / 2;
    if method.uses_cutoffs() && pairs < p + 1 {
        return Err(Error::SampleTooSmall { n: pairs, required: p + 1 });
    }
    let mut diffs = DMatrix::<f64>::zeros(pairs, p);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            diffs.set_row(k, &(x.row(i) - x.row(j)));
            k += 1;
        }
    }
    from_centered(diffs, method, DVector::zeros(p))
}

fn check_size(n: usize, p: usize, method: RadialMethod) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::EmptyInput);
    }
    if n < 2 {
        return Err(Error::SampleTooSmall { n, required: 2 });
    }
    if method.uses_cutoffs() && n < p + 1 {
        return Err(Error::SampleTooSmall { n, required: p + 1 });
    }
    Ok(())
}

fn from_centered(
    mut y: DMatrix<f64>,
    method: RadialMethod,
    location: DVector<f64>,
) -> Result<ScatterEstimate> {
    let n = y.nrows();
    let norms: Vec<f64> = y.row_iter().map(|r| r.norm()).collect();
    if norms.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("non-finite distance to the location".into()));
    }
    let cutoffs = if method.uses_cutoffs() {
        Some(compute_cutoffs(&norms, y.ncols())?)
    } else {
        None
    };
    let grid = cutoffs.unwrap_or(Cutoffs { q1: 0.0, q2: 0.0, q3: 0.0, q3star: 0.0 });
    let mut any = false;
    for (mut r, &d) in y.row_iter_mut().zip(&norms) {
        let w = method.xi(d, &grid);
        any |= w != 0.0 && d != 0.0;
        r *= w;
    }
    if !any {
        return Err(Error::DegenerateScatter);
    }
    let s = y.tr_mul(&y) / n as f64;
    let matrix = (&s + s.transpose()) * 0.5;
    let (eigenvalues, eigenvectors) = psd_eigen(&matrix)?;
    Ok(ScatterEstimate { matrix, eigenvalues, eigenvectors, location, method, cutoffs })
}

fn psd_eigen(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (mut values, vectors) = eigendecompose(s)?;
    let floor = EIGEN_FLOOR * values.max().max(1.0);
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -floor {
                return Err(Error::NegativeEigenvalue { value: *v });
            }
            *v = 0.0;
        }
    }
    Ok((values, vectors))
}

/// Largest entry of `|S - S^T|` relative to the largest entry of `|S|`.
pub fn asymmetry(s: &DMatrix<f64>) -> f64 {
    let scale = s.amax().max(f64::MIN_POSITIVE);
    (s - s.transpose()).amax() / scale
}

/// Spectral decomposition of a symmetric matrix, eigenvalues descending.
/// Each eigenvector is signed so that its largest-magnitude entry is
/// positive (the first such entry on exact ties).
pub fn eigendecompose(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let asym = asymmetry(s);
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidMatrix { asymmetry: asym });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let p = s.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::<f64>::zeros(p, p);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let lead = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
        if lead < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// `det(S)^(-1/p) S`, which has unit determinant.
pub fn shape(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = s.nrows();
    let (values, _) = eigendecompose(s)?;
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::SingularScatter { det: values.iter().product() });
    }
    let log_det: f64 = values.iter().map(|v| v.ln()).sum();
    Ok(s * (-log_det / p as f64).exp())
}

/// Cutoffs of `|X|` for `X ~ N(0, I_p)`, estimated from a calibration
/// sample of `samples` norms.
pub fn calibrated_cutoffs(p: usize, samples: usize, seed: u64) -> Result<Cutoffs> {
    let chi = ChiSquared::new(p as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::stream(seed, &[p as u64, 0]);
    let norms: Vec<f64> = (0..samples).map(|_| chi.sample(&mut rng).sqrt()).collect();
    compute_cutoffs(&norms, p)
}

/// Monte Carlo estimate of `c_g = E[g_1(X)^2]` at `X ~ N(0, I_p)`, where
/// `g(x) = x xi(|x|)`.
///
/// The population cutoffs come from a calibration draw of
/// [`CALIBRATION_SAMPLES`] norms and stay fixed for the main draw. By
/// symmetry `E[g_1^2] = E[R^2 xi(R)^2] / p`, which is what is averaged.
/// Classical and SSCM have the closed forms 1 and `1/p`.
pub fn consistency_factor(
    method: RadialMethod,
    p: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    match method {
        RadialMethod::Classical => return Ok(1.0),
        RadialMethod::Sscm => return Ok(1.0 / p as f64),
        _ => {}
    }
    if mc_samples == 0 {
        return Err(Error::InvalidArgument("mc_samples must be positive".into()));
    }
    let cutoffs = calibrated_cutoffs(p, CALIBRATION_SAMPLES, seed)?;
    let chi = ChiSquared::new(p as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::stream(seed, &[p as u64, 1]);
    let mut sum = 0.0;
    for _ in 0..mc_samples {
        let r2: f64 = chi.sample(&mut rng);
        let w = method.xi(r2.sqrt(), &cutoffs);
        sum += r2 * w * w;
    }
    Ok(sum / mc_samples as f64 / p as f64)
}
