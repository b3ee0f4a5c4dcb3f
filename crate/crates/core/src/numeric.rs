//! Small numerical utilities shared across modules: sample medians, a
//! bracketing root finder, Gauss-Legendre rules and a few distribution
//! helpers built on `statrs`.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Consistency constant of the MAD at the normal distribution.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Sample median; the mean of the two middle order statistics for even `n`.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Unscaled median absolute deviation around the sample median.
pub fn mad(values: &[f64]) -> Result<(f64, f64)> {
    let med = median(values)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    Ok((med, median(&dev)?))
}

/// Finds a root of `f` on `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them is zero).
/// Bisection runs until the bracket stops shrinking in floating point, so
/// the result is accurate to about one ulp of the root even when `f` has
/// jumps (it then returns the jump location).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numeric(format!(
            "root not bracketed on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre integration of `f` over `[a, b]` using panels of
/// width at most `max_width`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_width: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(20);
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    RULE.with(|(nodes, weights)| {
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + k as f64 * width;
            let half = 0.5 * width;
            let mid = lo + half;
            let mut s = 0.0;
            for (x, w) in nodes.iter().zip(weights) {
                s += w * f(mid + half * x);
            }
            total += s * half;
        }
        total
    })
}

pub fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

fn chi_squared(df: f64) -> ChiSquared {
    ChiSquared::new(df).expect("degrees of freedom must be positive")
}

pub fn chi_squared_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        chi_squared(df).cdf(x)
    }
}

pub fn chi_squared_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        chi_squared(df).sf(x)
    }
}

pub fn chi_squared_pdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        chi_squared(df).pdf(x)
    }
}

/// Quantile of the chi-squared distribution, by bisection on the CDF.
pub fn chi_squared_quantile(df: f64, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probability {prob} outside (0, 1)"
        )));
    }
    let mut hi = df + 10.0 * (2.0 * df).sqrt() + 10.0;
    while chi_squared_cdf(df, hi) < prob {
        hi *= 2.0;
    }
    bisect(|x| chi_squared_cdf(df, x) - prob, 0.0, hi)
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
