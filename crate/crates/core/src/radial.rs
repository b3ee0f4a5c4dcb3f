//! Radial functions and the distance cutoffs they are built from.
//!
//! A generalized spatial sign transform maps a centered point `t` to
//! `t * xi(|t|)`. The five bounded radial functions (Winsor, Quad, Ball,
//! Shell, LR) are piecewise functions of the distance with breakpoints at the
//! cutoffs `Q1 <= Q2 <= Q3 <= Q3*`, which are computed from the distances
//! themselves through `hmed`/`hmad` of the distances raised to the 2/3 power.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::MAD_CONSISTENCY;

/// Rank used by [`hmed`]: `floor((n + p + 1) / 2)`.
pub fn h_rank(n: usize, p: usize) -> usize {
    (n + p + 1) / 2
}

/// The `h`-th smallest value with `h = floor((n + p + 1) / 2)`.
pub fn hmed(values: &[f64], p: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let h = h_rank(n, p);
    if h > n {
        return Err(Error::DimensionExceedsSample { h, n });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[h - 1])
}

/// `hmed` of the absolute deviations from `hmed`.
pub fn hmad(values: &[f64], p: usize) -> Result<f64> {
    let center = hmed(values, p)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    hmed(&dev, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q3star: f64,
}

impl Cutoffs {
    /// Cutoffs from the location and scale of the 2/3-power distances.
    ///
    /// `center` and `spread` live on the transformed scale; `q2` is supplied
    /// separately on the raw scale so that it equals an actual order
    /// statistic of the distances instead of a rounded back-transform.
    pub(crate) fn from_transformed(center: f64, spread: f64, q2: f64) -> Self {
        let back = |t: f64| t.max(0.0).powf(1.5);
        let q1 = back(center - spread).min(q2);
        let q3 = back(center + spread).max(q2);
        let q3star = back(center + MAD_CONSISTENCY * spread).max(q3);
        Cutoffs { q1, q2, q3, q3star }
    }
}

/// Computes `(Q1, Q2, Q3, Q3*)` from Euclidean distances `d_i = |x_i - T|`.
pub fn compute_cutoffs(distances: &[f64], p: usize) -> Result<Cutoffs> {
    let transformed: Vec<f64> = distances.iter().map(|d| d.powf(2.0 / 3.0)).collect();
    let center = hmed(&transformed, p)?;
    let spread = hmad(&transformed, p)?;
    // x^(3/2) is increasing, so hmed of the raw distances picks the same
    // observation as hmed on the transformed scale.
    let q2 = hmed(distances, p)?;
    let mut c = Cutoffs::from_transformed(center, spread, q2);
    // hmad is attained by an observation, so one distance lies on Q1 or Q3
    // up to rounding; snap so that it is treated as lying on the boundary.
    c.q1 = snap(c.q1, distances).min(c.q2);
    c.q3 = snap(c.q3, distances).max(c.q2);
    c.q3star = c.q3star.max(c.q3);
    Ok(c)
}

const SNAP_TOL: f64 = 1e-12;

fn snap(q: f64, distances: &[f64]) -> f64 {
    distances
        .iter()
        .copied()
        .filter(|d| (d - q).abs() <= SNAP_TOL * q)
        .min_by(|a, b| (a - q).abs().total_cmp(&(b - q).abs()))
        .unwrap_or(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialMethod {
    /// `xi(r) = 1`: the plain covariance matrix.
    Classical,
    /// `xi(r) = 1/r`: the spatial sign covariance matrix.
    Sscm,
    /// 1 up to `Q2`, then `Q2/r`.
    Winsor,
    /// 1 up to `Q2`, then `(Q2/r)^2`.
    Quad,
    /// 1 up to `Q2`, then 0.
    Ball,
    /// 1 on `[Q1, Q3]`, 0 elsewhere.
    Shell,
    /// 1 up to `Q2`, linear down to 0 at `Q3*`.
    Lr,
}

impl RadialMethod {
    pub const ALL: [RadialMethod; 7] = [
        Self::Classical,
        Self::Sscm,
        Self::Winsor,
        Self::Quad,
        Self::Ball,
        Self::Shell,
        Self::Lr,
    ];

    /// The five bounded radial functions that depend on cutoffs.
    pub const GENERALIZED: [RadialMethod; 5] =
        [Self::Winsor, Self::Quad, Self::Ball, Self::Shell, Self::Lr];

    pub fn uses_cutoffs(self) -> bool {
        !matches!(self, Self::Classical | Self::Sscm)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Classical => "classical",
            Self::Sscm => "sscm",
            Self::Winsor => "winsor",
            Self::Quad => "quad",
            Self::Ball => "ball",
            Self::Shell => "shell",
            Self::Lr => "lr",
        }
    }

    /// Evaluates the radial function at distance `r >= 0`.
    ///
    /// The SSCM weight at `r = 0` is defined as 0: a point sitting on the
    /// center has no spatial sign. Cutoffs are ignored by `Classical` and
    /// `Sscm`.
    pub fn xi(self, r: f64, c: &Cutoffs) -> f64 {
        match self {
            Self::Classical => 1.0,
            Self::Sscm => {
                if r > 0.0 {
                    1.0 / r
                } else {
                    0.0
                }
            }
            Self::Winsor => {
                if r <= c.q2 {
                    1.0
                } else {
                    c.q2 / r
                }
            }
            Self::Quad => {
                if r <= c.q2 {
                    1.0
                } else {
                    (c.q2 / r).powi(2)
                }
            }
            Self::Ball => {
                if r <= c.q2 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Shell => {
                if r < c.q1 || r > c.q3 {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Lr => {
                if r <= c.q2 {
                    1.0
                } else if r <= c.q3star {
                    (c.q3star - r) / (c.q3star - c.q2)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Free-function form of [`RadialMethod::xi`].
pub fn xi(method: RadialMethod, r: f64, cutoffs: &Cutoffs) -> f64 {
    method.xi(r, cutoffs)
}

impl fmt::Display for RadialMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RadialMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Self::Classical),
            "sscm" => Ok(Self::Sscm),
            "winsor" => Ok(Self::Winsor),
            "quad" => Ok(Self::Quad),
            "ball" => Ok(Self::Ball),
            "shell" => Ok(Self::Shell),
            "lr" => Ok(Self::Lr),
            other => Err(Error::InvalidArgument(format!(
                "unknown radial method {other:?}"
            ))),
        }
    }
}
