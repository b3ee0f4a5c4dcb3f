use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Eigenvalue pattern of a diagonal covariance: constant `(1, ..., 1)`,
/// linear `(p, p-1, ..., 1)` or quadratic `(p^2, (p-1)^2, ..., 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSetting {
    Constant,
    Linear,
    Quadratic,
}

impl EigenSetting {
    pub const ALL: [EigenSetting; 3] = [Self::Constant, Self::Linear, Self::Quadratic];

    /// Eigenvalues in descending order.
    pub fn eigenvalues(self, p: usize) -> Vec<f64> {
        (1..=p)
            .rev()
            .map(|j| match self {
                Self::Constant => 1.0,
                Self::Linear => j as f64,
                Self::Quadratic => (j * j) as f64,
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
        }
    }

    pub(crate) fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for EigenSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EigenSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(Self::Constant),
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(Error::InvalidArgument(format!(
                "unknown eigenvalue setting {other:?}"
            ))),
        }
    }
}
