//! Influence functions of the scatter functionals at `F = N(0, I_p)`.
//!
//! At the spherical model every GSSCM functional is `(K/p) I` with
//! `K = E[R^2 xi(R)^2]` and `R = |X|`. Contaminating `F` at `z` moves the
//! cutoffs through the median and MAD of `G`, the law of `R^(2/3)`, so
//!
//! ```text
//! IF(z) = g(z) g(z)^T - (K/p) I + (1/p) sum_j IF(z, Q_j) dK/dQ_j I
//! ```
//!
//! The partial derivatives of `K` are radial integrals against the chi
//! density. A jump of `xi` from `a` to `b` at a cutoff `Q` contributes the
//! boundary term `(a^2 - b^2) Q^2 f_R(Q)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{self, MAD_CONSISTENCY};
use crate::radial::{Cutoffs, RadialMethod};

const PANEL: f64 = 0.05;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Influence of contamination on the four cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffIFs {
    pub if_q1: f64,
    pub if_q2: f64,
    pub if_q3: f64,
    pub if_q3star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IFResult {
    pub z: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub method: RadialMethod,
    /// Whether `matrix` was divided by the consistency factor.
    pub normalized: bool,
}

/// Population quantities of `|X|` and `|X|^(2/3)` for `X ~ N(0, I_p)`.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    p: usize,
    median_g: f64,
    mad_g: f64,
    cutoffs: Cutoffs,
    f_med: f64,
    f_lo: f64,
    f_hi: f64,
    r_max: f64,
}

impl GaussianModel {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let df = p as f64;
        let cdf_g = |t: f64| numeric::chi_squared_cdf(df, t.powi(3));
        let hi = (df + 20.0 * (2.0 * df).sqrt() + 20.0).cbrt();
        let median_g = numeric::bisect(|t| cdf_g(t) - 0.5, 0.0, hi)?;
        let mad_g = numeric::bisect(|s| cdf_g(median_g + s) - cdf_g(median_g - s) - 0.5, 0.0, hi)?;
        let back = |t: f64| t.max(0.0).powf(1.5);
        let cutoffs = Cutoffs {
            q1: back(median_g - mad_g),
            q2: back(median_g),
            q3: back(median_g + mad_g),
            q3star: back(median_g + MAD_CONSISTENCY * mad_g),
        };
        let mut model = GaussianModel {
            p,
            median_g,
            mad_g,
            cutoffs,
            f_med: 0.0,
            f_lo: 0.0,
            f_hi: 0.0,
            // chi tail beyond this is far below 1e-12
            r_max: df.sqrt() + 12.0,
        };
        model.f_med = model.density_g(median_g);
        model.f_lo = model.density_g(median_g - mad_g);
        model.f_hi = model.density_g(median_g + mad_g);
        for (point, f) in [(median_g, model.f_med), (median_g + mad_g, model.f_hi)] {
            if !(f > 0.0) {
                return Err(Error::SingularInfluence { point });
            }
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn median_g(&self) -> f64 {
        self.median_g
    }

    pub fn mad_g(&self) -> f64 {
        self.mad_g
    }

    /// Population cutoffs of `|X|`.
    pub fn cutoffs(&self) -> Cutoffs {
        self.cutoffs
    }

    /// Density of `G`, the law of `|X|^(2/3)`: `f_chi2(t^3) 3 t^2`.
    pub fn density_g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        numeric::chi_squared_pdf(self.p as f64, t.powi(3)) * 3.0 * t * t
    }

    /// Chi density of `R = |X|`.
    pub fn density_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return if self.p == 1 { (2.0 / std::f64::consts::PI).sqrt() } else { 0.0 };
        }
        let k = self.p as f64 / 2.0;
        ((self.p as f64 - 1.0) * r.ln() - 0.5 * r * r - (k - 1.0) * std::f64::consts::LN_2 - ln_gamma(k)).exp()
    }

    pub fn if_median(&self, t: f64) -> f64 {
        sign(t - self.median_g) / (2.0 * self.f_med)
    }

    /// Influence function of the unscaled MAD under `G`.
    pub fn if_mad(&self, t: f64) -> f64 {
        let (m, s) = (self.median_g, self.mad_g);
        let num = sign((t - m).abs() - s) - sign(t - m) * (self.f_hi - self.f_lo) / self.f_med;
        num / (2.0 * (self.f_hi + self.f_lo))
    }

    /// Cutoff influence functions for contamination at distance `norm`.
    pub fn if_cutoffs_at(&self, norm: f64) -> CutoffIFs {
        let t = norm.powf(2.0 / 3.0);
        let (m, s) = (self.median_g, self.mad_g);
        let med = self.if_median(t);
        let mad = self.if_mad(t);
        let d = |base: f64| 1.5 * base.max(0.0).sqrt();
        CutoffIFs {
            if_q1: d(m - s) * (med - mad),
            if_q2: d(m) * med,
            if_q3: d(m + s) * (med + mad),
            if_q3star: d(m + MAD_CONSISTENCY * s) * (med + MAD_CONSISTENCY * mad),
        }
    }

    fn radial<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let b = b.min(self.r_max);
        numeric::integrate(|r| f(r) * self.density_r(r), a, b, PANEL)
    }

    /// `K = E[R^2 xi(R)^2]`.
    pub fn second_moment(&self, method: RadialMethod) -> f64 {
        let c = self.cutoffs;
        let inner = self.radial(|r| r * r, 0.0, c.q2);
        match method {
            RadialMethod::Classical => self.p as f64,
            RadialMethod::Sscm => 1.0,
            RadialMethod::Winsor => inner + c.q2 * c.q2 * self.radial(|_| 1.0, c.q2, f64::INFINITY),
            RadialMethod::Quad => {
                inner + c.q2.powi(4) * self.radial(|r| 1.0 / (r * r), c.q2, f64::INFINITY)
            }
            RadialMethod::Ball => inner,
            RadialMethod::Shell => self.radial(|r| r * r, c.q1, c.q3),
            RadialMethod::Lr => {
                let w = c.q3star - c.q2;
                inner + self.radial(|r| (r * (c.q3star - r) / w).powi(2), c.q2, c.q3star)
            }
        }
    }

    /// Population consistency factor `c_g = K / p`.
    pub fn consistency_factor(&self, method: RadialMethod) -> f64 {
        self.second_moment(method) / self.p as f64
    }

    /// Partial derivatives of `K` with respect to `(Q1, Q2, Q3, Q3*)`.
    pub fn moment_gradient(&self, method: RadialMethod) -> [f64; 4] {
        let c = self.cutoffs;
        let edge = |q: f64| q * q * self.density_r(q);
        match method {
            RadialMethod::Classical | RadialMethod::Sscm => [0.0; 4],
            RadialMethod::Winsor => {
                [0.0, 2.0 * c.q2 * self.radial(|_| 1.0, c.q2, f64::INFINITY), 0.0, 0.0]
            }
            RadialMethod::Quad => [
                0.0,
                4.0 * c.q2.powi(3) * self.radial(|r| 1.0 / (r * r), c.q2, f64::INFINITY),
                0.0,
                0.0,
            ],
            RadialMethod::Ball => [0.0, edge(c.q2), 0.0, 0.0],
            RadialMethod::Shell => [-edge(c.q1), 0.0, edge(c.q3), 0.0],
            RadialMethod::Lr => {
                let w = c.q3star - c.q2;
                let xi = |r: f64| (c.q3star - r) / w;
                let d2 = self.radial(|r| r * r * 2.0 * xi(r) * (c.q3star - r) / (w * w), c.q2, c.q3star);
                let d3 = self.radial(|r| r * r * 2.0 * xi(r) * (r - c.q2) / (w * w), c.q2, c.q3star);
                [0.0, d2, 0.0, d3]
            }
        }
    }
}

/// Influence function of a GSSCM at the spherical Gaussian model, with the
/// model quantities computed once for repeated evaluation.
#[derive(Debug, Clone)]
pub struct InfluenceModel {
    model: GaussianModel,
    method: RadialMethod,
    k: f64,
    gradient: [f64; 4],
}

impl InfluenceModel {
    pub fn new(method: RadialMethod, p: usize) -> Result<Self> {
        let model = GaussianModel::new(p)?;
        let k = model.second_moment(method);
        let gradient = model.moment_gradient(method);
        if !(k.is_finite() && gradient.iter().all(|g| g.is_finite())) {
            return Err(Error::Numeric(format!("radial integrals for {method} are not finite")));
        }
        Ok(InfluenceModel { model, method, k, gradient })
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    /// `c_g = K / p`.
    pub fn consistency_factor(&self) -> f64 {
        self.k / self.model.p as f64
    }

    pub fn evaluate(&self, z: &DVector<f64>, normalize: bool) -> Result<IFResult> {
        let p = self.model.p;
        if z.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: z.len() });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("contamination point must be finite".into()));
        }
        let norm = z.norm();
        let g = z * self.method.xi(norm, &self.model.cutoffs);
        let kappa = if self.method.uses_cutoffs() {
            let c = self.model.if_cutoffs_at(norm);
            let ifs = [c.if_q1, c.if_q2, c.if_q3, c.if_q3star];
            ifs.iter().zip(&self.gradient).map(|(a, b)| a * b).sum()
        } else {
            0.0
        };
        let mut matrix = &g * g.transpose();
        for i in 0..p {
            matrix[(i, i)] += (kappa - self.k) / p as f64;
        }
        if normalize {
            matrix /= self.consistency_factor();
        }
        Ok(IFResult { z: z.clone(), matrix, method: self.method, normalized: normalize })
    }
}

/// `z z^T - Sigma`.
pub fn if_classical(z: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if sigma.nrows() != z.len() || sigma.ncols() != z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), found: sigma.nrows() });
    }
    Ok(z * z.transpose() - sigma)
}

/// `u u^T - I/p` with `u = z/|z|`; at `z = 0` the sign is taken as zero.
pub fn if_sscm(z: &DVector<f64>) -> DMatrix<f64> {
    let p = z.len();
    let n = z.norm();
    let mut m = if n > 0.0 {
        let u = z / n;
        &u * u.transpose()
    } else {
        DMatrix::zeros(p, p)
    };
    for i in 0..p {
        m[(i, i)] -= 1.0 / p as f64;
    }
    m
}

/// Cutoff influence functions at `F = N(0, I_p)`.
pub fn if_cutoffs(z: &DVector<f64>, p: usize) -> Result<CutoffIFs> {
    if z.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: z.len() });
    }
    Ok(GaussianModel::new(p)?.if_cutoffs_at(z.norm()))
}

/// Influence function of the GSSCM of `method` at `F = N(0, I_p)`,
/// optionally divided by the consistency factor.
pub fn if_gsscm(z: &DVector<f64>, method: RadialMethod, normalize: bool) -> Result<IFResult> {
    InfluenceModel::new(method, z.len())?.evaluate(z, normalize)
}

/// Contamination path in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(z, z)`
    DiagXy,
    /// `(z, 0)`
    AxisX,
}

impl Direction {
    pub fn point(self, z: f64) -> DVector<f64> {
        match self {
            Direction::DiagXy => DVector::from_vec(vec![z, z]),
            Direction::AxisX => DVector::from_vec(vec![z, 0.0]),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "diag_xy" | "diag" => Ok(Direction::DiagXy),
            "axis_x" | "axis" => Ok(Direction::AxisX),
            other => Err(Error::InvalidArgument(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IfRow {
    pub z: f64,
    pub method: RadialMethod,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    pub normalized: bool,
}

/// Bivariate influence functions along a contamination path, one row per
/// `z` value.
pub fn if_grid(
    method: RadialMethod,
    direction: Direction,
    z_values: &[f64],
    normalize: bool,
) -> Result<Vec<IfRow>> {
    let model = InfluenceModel::new(method, 2)?;
    z_values
        .par_iter()
        .map(|&z| {
            let r = model.evaluate(&direction.point(z), normalize)?;
            let m = &r.matrix;
            Ok(IfRow { z, method, s11: m[(0, 0)], s12: m[(0, 1)], s22: m[(1, 1)], normalized: normalize })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn classical_closed_form() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(if_classical(&dvector![1.0, 1.0], &i2).unwrap(), dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert_eq!(if_classical(&dvector![0.0, 0.0], &i2).unwrap(), -i2.clone());
        assert_eq!(
            if_classical(&dvector![2.0, 0.0], &dmatrix![4.0, 0.0; 0.0, 1.0]).unwrap(),
            dmatrix![0.0, 0.0; 0.0, -1.0]
        );
        let z = dvector![0.3, -2.0];
        let via_model = if_gsscm(&z, RadialMethod::Classical, false).unwrap().matrix;
        assert_relative_eq!(via_model, if_classical(&z, &i2).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn sscm_closed_form() {
        assert_relative_eq!(if_sscm(&dvector![2.0, 0.0]), dmatrix![0.5, 0.0; 0.0, -0.5]);
        for t in [0.1, 1.0, 7.0] {
            let m = if_sscm(&dvector![t, t]);
            assert_relative_eq!(m, dmatrix![0.0, 0.5; 0.5, 0.0], epsilon = 1e-15);
            assert!(m.trace().abs() < 1e-15);
        }
        assert_relative_eq!(if_sscm(&DVector::zeros(3)), -DMatrix::identity(3, 3) / 3.0);
        let z = dvector![0.3, -2.0, 1.0];
        assert_relative_eq!(if_gsscm(&z, RadialMethod::Sscm, false).unwrap().matrix, if_sscm(&z), epsilon = 1e-14);
    }

    #[test]
    fn population_cutoffs_in_two_dimensions() {
        let m = GaussianModel::new(2).unwrap();
        // |X|^2 ~ Exp(1/2): median 2 ln 2
        assert_relative_eq!(m.median_g(), (2.0 * std::f64::consts::LN_2).cbrt(), max_relative = 1e-12);
        assert_relative_eq!(m.cutoffs().q2, (2.0 * std::f64::consts::LN_2).sqrt(), max_relative = 1e-12);
        // MAD: P(|T - m| <= s) = 1/2
        let (med, s) = (m.median_g(), m.mad_g());
        let cdf = |t: f64| 1.0 - (-(t.powi(3)) / 2.0).exp();
        assert!((cdf(med + s) - cdf(med - s) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn consistency_factor_closed_forms() {
        let m = GaussianModel::new(2).unwrap();
        assert_relative_eq!(m.consistency_factor(RadialMethod::Winsor), 0.5, max_relative = 1e-10);
        let q2 = m.cutoffs().q2;
        // Ball: E[R^2; R <= Q2] / 2 for R^2 ~ Exp(1/2)
        let a = q2 * q2;
        let ball = (2.0 - (a + 2.0) * (-a / 2.0).exp()) / 2.0;
        assert_relative_eq!(m.consistency_factor(RadialMethod::Ball), ball, max_relative = 1e-10);
        for p in [1, 3, 7] {
            let m = GaussianModel::new(p).unwrap();
            assert_relative_eq!(m.consistency_factor(RadialMethod::Classical), 1.0);
            assert_relative_eq!(m.second_moment(RadialMethod::Sscm), 1.0);
            let mass = m.radial(|_| 1.0, 0.0, f64::INFINITY);
            assert!((mass - 1.0).abs() < 1e-12, "p = {p}: {mass}");
        }
    }

    #[test]
    fn gradient_matches_difference_quotient_of_second_moment() {
        // Continuous methods: perturb one cutoff, recompute K directly.
        let model = GaussianModel::new(3).unwrap();
        for method in RadialMethod::GENERALIZED {
            let grad = model.moment_gradient(method);
            for j in 0..4 {
                let h = 1e-6;
                let shifted = |d: f64| {
                    let mut m = model.clone();
                    let c = &mut m.cutoffs;
                    match j {
                        0 => c.q1 += d,
                        1 => c.q2 += d,
                        2 => c.q3 += d,
                        _ => c.q3star += d,
                    }
                    m.second_moment(method)
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                if j == 0 && method == RadialMethod::Shell || j == 2 && method == RadialMethod::Shell || j == 1 && method != RadialMethod::Shell || j == 3 && method == RadialMethod::Lr {
                    assert!((fd - grad[j]).abs() < 1e-5 * (1.0 + grad[j].abs()), "{method} Q{j}: {fd} vs {}", grad[j]);
                } else {
                    assert!(grad[j] == 0.0 && fd.abs() < 1e-6, "{method} Q{j}: {fd}");
                }
            }
        }
    }

    #[test]
    fn cutoff_if_examples() {
        let m = GaussianModel::new(2).unwrap();
        let at_median = m.cutoffs().q2;
        let c = if_cutoffs(&dvector![at_median, 0.0], 2).unwrap();
        assert_eq!(c.if_q2, 0.0);
        let inside = if_cutoffs(&dvector![0.2, 0.1], 2).unwrap();
        let outside = if_cutoffs(&dvector![5.0, -3.0], 2).unwrap();
        assert_relative_eq!(inside.if_q2, -outside.if_q2);
        let limit = 1.5 * m.median_g().sqrt() / (2.0 * m.density_g(m.median_g()));
        assert_relative_eq!(outside.if_q2, limit, max_relative = 1e-14);
    }

    #[test]
    fn off_diagonal_vanishes_on_the_axis() {
        for method in RadialMethod::ALL {
            for row in if_grid(method, Direction::AxisX, &[0.0, 0.3, 1.0, 1.2, 2.5, 10.0, 100.0], true).unwrap() {
                assert!(row.s12.abs() < 1e-8, "{method}: {row:?}");
            }
        }
    }

    #[test]
    fn sscm_grid_rows() {
        let zs = [0.0, 0.5, 1.0, 3.0, 20.0];
        for row in if_grid(RadialMethod::Sscm, Direction::DiagXy, &zs, true).unwrap() {
            let expected = if row.z == 0.0 { -1.0 } else { 0.0 };
            assert!((row.s11 - expected).abs() < 1e-12, "{row:?}");
        }
        for row in if_grid(RadialMethod::Sscm, Direction::AxisX, &zs[1..], true).unwrap() {
            assert!((row.s22 + 1.0).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn symmetric_and_rotation_covariant() {
        let angle: f64 = 0.7;
        let (s, c) = angle.sin_cos();
        let h = dmatrix![c, -s; s, c];
        for method in RadialMethod::ALL {
            let model = InfluenceModel::new(method, 2).unwrap();
            for z in [dvector![0.4, 0.1], dvector![1.3, -0.2], dvector![4.0, 2.0]] {
                let a = model.evaluate(&z, true).unwrap().matrix;
                assert!((&a - a.transpose()).amax() < 1e-10);
                let b = model.evaluate(&(&h * &z), true).unwrap().matrix;
                assert!((b - &h * a * h.transpose()).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn bounded_for_generalized_methods() {
        let zs: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        for method in RadialMethod::GENERALIZED {
            for dir in [Direction::DiagXy, Direction::AxisX] {
                let sup = if_grid(method, dir, &zs, true)
                    .unwrap()
                    .iter()
                    .map(|r| r.s11.abs().max(r.s12.abs()).max(r.s22.abs()))
                    .fold(0.0, f64::max);
                assert!(sup < 20.0, "{method}: {sup}");
            }
        }
        let classical = if_grid(RadialMethod::Classical, Direction::AxisX, &[10.0, 100.0], true).unwrap();
        assert_relative_eq!(classical[1].s11 / classical[0].s11, 9999.0 / 99.0, max_relative = 1e-12);
    }

    #[test]
    fn mean_influence_is_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for method in RadialMethod::ALL {
            let model = InfluenceModel::new(method, 2).unwrap();
            let n = 400_000;
            let mut acc = DMatrix::<f64>::zeros(2, 2);
            for _ in 0..n {
                let z = dvector![rng.sample(StandardNormal), rng.sample(StandardNormal)];
                acc += model.evaluate(&z, false).unwrap().matrix;
            }
            acc /= n as f64;
            assert!(acc.amax() < 1e-2, "{method}: {acc}");
        }
    }

    #[test]
    fn jumps_sit_at_cutoff_radii() {
        let step = 0.01;
        let zs: Vec<f64> = (1..600).map(|i| i as f64 * step).collect();
        let model = GaussianModel::new(2).unwrap();
        let c = model.cutoffs();
        for (method, radii) in [(RadialMethod::Ball, vec![c.q2]), (RadialMethod::Shell, vec![c.q1, c.q2, c.q3])] {
            let rows = if_grid(method, Direction::AxisX, &zs, true).unwrap();
            for w in rows.windows(2) {
                if (w[1].s22 - w[0].s22).abs() > 0.1 {
                    let near = radii.iter().any(|q| (w[0].z - q).abs() <= step + 1e-12 || (w[1].z - q).abs() <= step + 1e-12);
                    assert!(near, "{method}: jump between {} and {}", w[0].z, w[1].z);
                }
            }
        }
    }
}
