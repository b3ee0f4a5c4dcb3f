//! Convolution of independent gamma variables and the normal-approximation
//! experiment for quantiles of Euclidean norms.
//!
//! For `X ~ N(0, diag(lambda))`, `|X|^2` is the sum of `Gamma(1/2, 2 lambda_i)`
//! variables. The density is evaluated with Moschopoulos' single gamma
//! series: the sum equals a mixture of `Gamma(rho + k, beta_1)` laws where
//! `rho = sum alpha_i` and `beta_1` is the smallest scale.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::{self, MAD_CONSISTENCY};
use crate::rng;
use crate::spectrum::EigenSetting;

/// Stop adding mixture terms once the remaining weight is below this.
pub const SERIES_TOL: f64 = 1e-13;
/// Upper limit on the number of mixture terms.
pub const MAX_TERMS: usize = 200_000;

/// Law of `sum_i G_i` with `G_i ~ Gamma(shape_i, scale_i)`.
#[derive(Debug, Clone)]
pub struct CogaDistribution {
    shapes: Vec<f64>,
    scales: Vec<f64>,
    rho: f64,
    beta: f64,
    /// Mixture weights of `Gamma(rho + k, beta)`, summing to 1 up to `SERIES_TOL`.
    weights: Vec<f64>,
}

impl CogaDistribution {
    pub fn new(shapes: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::EmptyInput);
        }
        if shapes.len() != scales.len() {
            return Err(Error::DimensionMismatch { expected: shapes.len(), found: scales.len() });
        }
        if shapes.iter().chain(&scales).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(
                "gamma shapes and scales must be positive and finite".into(),
            ));
        }
        let rho: f64 = shapes.iter().sum();
        let beta = scales.iter().copied().fold(f64::INFINITY, f64::min);
        let weights = series_weights(&shapes, &scales, beta)?;
        Ok(CogaDistribution { shapes, scales, rho, beta, weights })
    }

    /// Distribution of `|X|^2` for `X ~ N(0, diag(eigenvalues))`.
    pub fn squared_norm(eigenvalues: &[f64]) -> Result<Self> {
        Self::new(vec![0.5; eigenvalues.len()], eigenvalues.iter().map(|l| 2.0 * l).collect())
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Number of mixture terms retained.
    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        self.shapes.iter().zip(&self.scales).map(|(a, b)| a * b).sum()
    }

    pub fn variance(&self) -> f64 {
        self.shapes.iter().zip(&self.scales).map(|(a, b)| a * b * b).sum()
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        if x == 0.0 {
            return Ok(if self.rho < 1.0 {
                f64::INFINITY
            } else if self.rho == 1.0 {
                self.weights[0] / self.beta
            } else {
                0.0
            });
        }
        let u = x / self.beta;
        let lu = u.ln();
        // log density of Gamma(rho + k, beta) at x, advanced by recurrence
        let mut log_term = (self.rho - 1.0) * lu - u - ln_gamma(self.rho) - self.beta.ln();
        let mut sum = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            sum += w * log_term.exp();
            log_term += lu - (self.rho + k as f64).ln();
        }
        Ok(sum)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let u = x / self.beta;
        let lu = u.ln();
        // P(a + 1, u) = P(a, u) - u^a e^-u / Gamma(a + 1)
        let mut p = gamma_lr(self.rho, u);
        let mut log_step = self.rho * lu - u - ln_gamma(self.rho + 1.0);
        let mut sum = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            sum += w * p;
            p = (p - log_step.exp()).max(0.0);
            log_step += lu - (self.rho + k as f64 + 1.0).ln();
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidArgument(format!("probability must lie in (0, 1), got {prob}")));
        }
        let mut hi = self.mean() + 10.0 * self.variance().sqrt();
        while self.cdf(hi)? < prob {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Numeric("could not bracket the coga quantile".into()));
            }
        }
        numeric::bisect(|x| self.cdf(x).unwrap_or(f64::NAN) - prob, 0.0, hi)
    }
}

fn check_point(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("coga support is [0, inf), got {x}")));
    }
    Ok(())
}

/// Mixture weights `w_k = C delta_k` of the single gamma series.
fn series_weights(shapes: &[f64], scales: &[f64], beta: f64) -> Result<Vec<f64>> {
    let log_c: f64 = shapes.iter().zip(scales).map(|(a, b)| a * (beta / b).ln()).sum();
    let c = log_c.exp();
    if c == 0.0 {
        return Err(Error::Numeric("coga series leading weight underflows".into()));
    }
    let ratios: Vec<f64> = scales.iter().map(|b| 1.0 - beta / b).collect();
    // powers[i] = ratio_i^k, advanced as k grows
    let mut powers = ratios.clone();
    // gamma_k scaled by k, i.e. sum_i alpha_i ratio_i^k
    let mut kgamma: Vec<f64> = Vec::new();
    let mut weights = vec![c];
    let mut total = c;
    while 1.0 - total > SERIES_TOL {
        if weights.len() > MAX_TERMS {
            return Err(Error::NoConvergence {
                what: "coga series",
                iterations: MAX_TERMS,
                last: vec![total],
            });
        }
        kgamma.push(shapes.iter().zip(&powers).map(|(a, r)| a * r).sum());
        for (pw, r) in powers.iter_mut().zip(&ratios) {
            *pw *= r;
        }
        // w_{k+1} = 1/(k+1) sum_{i=1}^{k+1} i gamma_i w_{k+1-i}
        let k1 = weights.len();
        let next: f64 = (1..=k1).map(|i| kgamma[i - 1] * weights[k1 - i]).sum::<f64>() / k1 as f64;
        if next == 0.0 && kgamma.last() == Some(&0.0) {
            break;
        }
        weights.push(next);
        total += next;
    }
    Ok(weights)
}

/// Normalizing transform applied to the norms before assuming normality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `r^2`
    Square,
    /// `r`
    Fisher,
    /// `r^(2/3)`
    WilsonHilferty,
}

impl Transform {
    pub const ALL: [Transform; 3] = [Self::Square, Self::Fisher, Self::WilsonHilferty];

    pub fn power(self) -> f64 {
        match self {
            Self::Square => 2.0,
            Self::Fisher => 1.0,
            Self::WilsonHilferty => 2.0 / 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::Fisher => "fisher",
            Self::WilsonHilferty => "wilson_hilferty",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "square" => Ok(Self::Square),
            "fisher" => Ok(Self::Fisher),
            "wilson_hilferty" | "wh" => Ok(Self::WilsonHilferty),
            other => Err(Error::InvalidArgument(format!("unknown transform {other:?}"))),
        }
    }
}

/// Scale estimate used for the transformed norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MadScaling {
    /// MAD times 1.4826, a consistent estimate of a normal standard deviation.
    #[default]
    Consistent,
    /// The plain MAD.
    Raw,
}

/// Quantile of the norms obtained by treating `h(r)` as normal with
/// location `median(h(r))` and scale `mad(h(r))`, then transforming back.
pub fn wh_quantile_estimate(r_samples: &[f64], transform: Transform, prob: f64) -> Result<f64> {
    wh_quantile_estimate_with(r_samples, transform, prob, MadScaling::Consistent)
}

pub fn wh_quantile_estimate_with(
    r_samples: &[f64],
    transform: Transform,
    prob: f64,
    scaling: MadScaling,
) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must lie in (0, 1), got {prob}")));
    }
    if r_samples.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidArgument("norms must be nonnegative".into()));
    }
    let power = transform.power();
    let h: Vec<f64> = r_samples.iter().map(|r| r.powf(power)).collect();
    let (mu, mad) = numeric::mad(&h)?;
    if mad == 0.0 && prob != 0.5 {
        log::warn!("zero MAD of transformed norms; quantile estimate collapses to the median");
    }
    let sigma = match scaling {
        MadScaling::Consistent => MAD_CONSISTENCY * mad,
        MadScaling::Raw => mad,
    };
    let q = mu + sigma * numeric::normal_quantile(prob);
    Ok(q.max(0.0).powf(1.0 / power))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhRow {
    pub p: usize,
    pub setting: EigenSetting,
    pub transform: Transform,
    pub f_coga_at_q3sq: f64,
    pub seed: u64,
}

/// Scales `2 lambda` rescaled to sum to `2p`.
pub fn standardized_scales(setting: EigenSetting, p: usize) -> Vec<f64> {
    let lambda = setting.eigenvalues(p);
    let total: f64 = lambda.iter().sum();
    lambda.iter().map(|l| 2.0 * p as f64 * l / total).collect()
}

/// For each dimension, draws `n_samples` values from the coga law with
/// shapes 1/2 and standardized scales, estimates the third quartile of the
/// norms with each transform and reports the exact coga CDF at its square.
///
/// Dimension `p` draws from its own stream derived from `seed`, so the
/// result does not depend on the thread count.
pub fn wh_experiment(
    p_range: &[usize],
    setting: EigenSetting,
    n_samples: usize,
    seed: u64,
    scaling: MadScaling,
) -> Result<Vec<WhRow>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if p_range.contains(&0) {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    let per_p: Vec<Result<Vec<WhRow>>> = p_range
        .par_iter()
        .map(|&p| {
            let scales = standardized_scales(setting, p);
            let dist = CogaDistribution::new(vec![0.5; p], scales.clone())?;
            let mut rng = rng::stream(seed, &[0xC06A, setting.index(), p as u64]);
            let r: Vec<f64> = (0..n_samples)
                .map(|_| {
                    scales
                        .iter()
                        .map(|s| {
                            let z: f64 = rng.sample(StandardNormal);
                            0.5 * s * z * z
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            Transform::ALL
                .iter()
                .map(|&t| {
                    let q3 = wh_quantile_estimate_with(&r, t, 0.75, scaling)?;
                    Ok(WhRow { p, setting, transform: t, f_coga_at_q3sq: dist.cdf(q3 * q3)?, seed })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(p_range.len() * 3);
    for r in per_p {
        rows.extend(r?);
    }
    Ok(rows)
}
