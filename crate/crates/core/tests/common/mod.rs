//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use gsscm::radial::RadialMethod;
use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, p: usize, sd: &[f64], seed: u64) -> DMatrix<f64> {
    let mut rng = gsscm::rng::stream(seed, &[0x7E57]);
    DMatrix::from_fn(n, p, |_, j| sd[j] * rng.sample::<f64, _>(StandardNormal))
}

/// One-sided exact sign test: probability of at least `wins` successes out
/// of `trials` fair coin flips.
pub fn sign_test(wins: usize, trials: usize) -> f64 {
    let ln_half = 0.5f64.ln();
    let mut ln_choose = 0.0;
    let mut terms = Vec::with_capacity(trials + 1);
    for k in 0..=trials {
        if k > 0 {
            ln_choose += ((trials - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            terms.push(ln_choose + trials as f64 * ln_half);
        }
    }
    terms.iter().map(|t| t.exp()).sum::<f64>().min(1.0)
}

/// Cutoffs of the contaminated bivariate model, on the distance scale.
#[derive(Debug, Clone, Copy)]
pub struct OracleCutoffs {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q3star: f64,
}

impl OracleCutoffs {
    pub fn radii(&self) -> [f64; 4] {
        [self.q1, self.q2, self.q3, self.q3star]
    }
}

/// Weight functions restated from their definitions.
pub fn weight(method: RadialMethod, r: f64, c: &OracleCutoffs) -> f64 {
    match method {
        RadialMethod::Classical => 1.0,
        RadialMethod::Sscm => 1.0 / r,
        RadialMethod::Winsor => {
            if r <= c.q2 {
                1.0
            } else {
                c.q2 / r
            }
        }
        RadialMethod::Quad => {
            if r <= c.q2 {
                1.0
            } else {
                (c.q2 / r).powi(2)
            }
        }
        RadialMethod::Ball => (r <= c.q2) as u8 as f64,
        RadialMethod::Shell => (c.q1 <= r && r <= c.q3) as u8 as f64,
        RadialMethod::Lr => {
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

/// Contamination model `(1 - eps) N(0, I_2) + eps delta_z`.
///
/// The cutoff functionals are evaluated on the mixture by bisecting the
/// defining equations, and the scatter functional by a polar quadrature:
/// composite Simpson in the radius, split at the cutoffs, times a
/// trapezoidal rule in the angle.
pub struct ContaminationOracle {
    pub radial_intervals: usize,
    pub angles: usize,
    pub r_max: f64,
}

impl Default for ContaminationOracle {
    fn default() -> Self {
        // 5 segments x 3200 intervals x 64 angles: about 10^6 nodes
        ContaminationOracle { radial_intervals: 3200, angles: 64, r_max: 9.0 }
    }
}

/// CDF of `|X|^{2/3}` for `X ~ N(0, I_2)`.
fn g_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t.powi(3) / 2.0).exp_m1()
    }
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a monotone predicate.
fn bisect_predicate(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl ContaminationOracle {
    pub fn cutoffs(&self, eps: f64, z: Vector2<f64>) -> OracleCutoffs {
        let tz = z.norm().powf(2.0 / 3.0);
        let mass = |a: f64, b: f64| {
            let point = if a <= tz && tz <= b { eps } else { 0.0 };
            (1.0 - eps) * (g_cdf(b) - g_cdf(a)) + point
        };
        let med = bisect_predicate(0.0, 50.0, |m| mass(0.0, m) >= 0.5);
        let mad = bisect_predicate(0.0, 50.0, |s| mass(med - s, med + s) >= 0.5);
        let back = |t: f64| t.max(0.0).powf(1.5);
        OracleCutoffs {
            q1: back(med - mad),
            q2: back(med),
            q3: back(med + mad),
            q3star: back(med + 1.4826 * mad),
        }
    }

    /// `S(F)` for the model with the given cutoffs, Gaussian part only.
    pub fn gaussian_part(&self, method: RadialMethod, c: &OracleCutoffs) -> Matrix2<f64> {
        let mut knots: Vec<f64> = vec![0.0];
        knots.extend(c.radii().iter().copied().filter(|&q| q > 0.0 && q < self.r_max));
        knots.push(self.r_max);
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut radial = 0.0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = self.radial_intervals;
            let h = (b - a) / m as f64;
            // evaluate just inside each segment so boundary membership never matters
            let inset = 1e-13 * (b - a);
            let f = |r: f64| {
                let r = r.clamp(a + inset, b - inset);
                let xi = weight(method, r, c);
                xi * xi * r * r * r * (-r * r / 2.0).exp() / (2.0 * std::f64::consts::PI)
            };
            let mut s = f(a) + f(b);
            for k in 1..m {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            radial += s * h / 3.0;
        }

        let mut angular = Matrix2::zeros();
        let step = 2.0 * std::f64::consts::PI / self.angles as f64;
        for k in 0..self.angles {
            let t = k as f64 * step;
            let u = Vector2::new(t.cos(), t.sin());
            angular += u * u.transpose() * step;
        }
        angular * radial
    }

    /// `S(F_eps)` with contamination mass `eps` at `z`.
    pub fn functional(&self, method: RadialMethod, eps: f64, z: Vector2<f64>) -> Matrix2<f64> {
        let c = self.cutoffs(eps, z);
        let r = z.norm();
        let xi = if r > 0.0 { weight(method, r, &c) } else { 0.0 };
        self.gaussian_part(method, &c) * (1.0 - eps) + z * z.transpose() * (eps * xi * xi)
    }

    /// Forward-difference influence function divided by the model's `c_g`.
    pub fn influence(&self, method: RadialMethod, eps: f64, z: Vector2<f64>, base: &Matrix2<f64>) -> Matrix2<f64> {
        let s = self.functional(method, eps, z);
        (s - base) / eps / base[(0, 0)]
    }
}
