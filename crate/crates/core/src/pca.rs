//! Principal components from a GSSCM, with score and orthogonal distances
//! and the four-way outlier map.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{self, MAD_CONSISTENCY};
use crate::radial::RadialMethod;
use crate::scatter::{gsscm, LocationMode};

/// Tail probability used for both outlier-map cutoffs.
pub const CUTOFF_LEVEL: f64 = 0.975;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardization {
    /// Column median and 1.4826-scaled MAD.
    Robust,
    /// Column mean and standard deviation.
    Classical,
    /// Leave the data as is.
    None,
}

/// Per-column `(location, scale)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ColumnScaling {
    pub fn identity(p: usize) -> Self {
        ColumnScaling { location: vec![0.0; p], scale: vec![1.0; p] }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.location[j]) / self.scale[j]))
    }

    /// Inverse of [`ColumnScaling::apply`].
    pub fn invert(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(z)?;
        Ok(DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * self.scale[j] + self.location[j]))
    }

    fn check(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.scale.len() {
            return Err(Error::DimensionMismatch { expected: self.scale.len(), found: x.ncols() });
        }
        Ok(())
    }
}

pub fn standardize(x: &DMatrix<f64>, mode: Standardization) -> Result<(DMatrix<f64>, ColumnScaling)> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut params = ColumnScaling::identity(x.ncols());
    if mode != Standardization::None {
        for (j, col) in x.column_iter().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            let (loc, scale) = match mode {
                Standardization::Robust => {
                    let (med, mad) = numeric::mad(&v)?;
                    (med, MAD_CONSISTENCY * mad)
                }
                _ => {
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    (mean, if v.len() > 1 { numeric::sample_sd(&v) } else { 0.0 })
                }
            };
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::DegenerateColumn { column: j });
            }
            params.location[j] = loc;
            params.scale[j] = scale;
        }
    }
    Ok((params.apply(x)?, params))
}

/// How the spread of each score column is measured for the score distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreScale {
    StandardDeviation,
    /// MAD times 1.4826.
    Mad,
    RawMad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaOptions {
    pub standardization: Standardization,
    pub location: LocationMode,
    pub score_scale: ScoreScale,
}

impl PcaOptions {
    /// Classical standardization, mean and standard deviations for the
    /// classical method; robust counterparts for every other method.
    pub fn for_method(method: RadialMethod) -> Self {
        if method == RadialMethod::Classical {
            PcaOptions {
                standardization: Standardization::Classical,
                location: LocationMode::Mean,
                score_scale: ScoreScale::StandardDeviation,
            }
        } else {
            PcaOptions {
                standardization: Standardization::Robust,
                location: LocationMode::default(),
                score_scale: ScoreScale::Mad,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Center on the standardized scale.
    pub center: DVector<f64>,
    /// `p x k`, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// Leading `k` eigenvalues, descending.
    pub eigenvalues: DVector<f64>,
    /// All `p` eigenvalues of the scatter estimate.
    pub all_eigenvalues: DVector<f64>,
    pub method: RadialMethod,
    pub column_standardization: ColumnScaling,
    /// Spread of each score column on the fitting data.
    pub score_scales: DVector<f64>,
}

impl PcaModel {
    pub fn components(&self) -> usize {
        self.loadings.ncols()
    }

    /// Standardized and centered observations `z_i`.
    pub fn centered(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut z = self.column_standardization.apply(x)?;
        for mut r in z.row_iter_mut() {
            r -= self.center.transpose();
        }
        Ok(z)
    }
}

pub fn fit_pca(x: &DMatrix<f64>, k: usize, method: RadialMethod) -> Result<PcaModel> {
    fit_pca_with(x, k, method, &PcaOptions::for_method(method))
}

pub fn fit_pca_with(
    x: &DMatrix<f64>,
    k: usize,
    method: RadialMethod,
    options: &PcaOptions,
) -> Result<PcaModel> {
    let p = x.ncols();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("number of components must lie in 1..={p}, got {k}")));
    }
    let (z, params) = standardize(x, options.standardization)?;
    let est = gsscm(&z, method, &options.location)?;
    let loadings = est.eigenvectors.columns(0, k).into_owned();
    let mut model = PcaModel {
        center: est.location.clone(),
        loadings,
        eigenvalues: est.eigenvalues.rows(0, k).into_owned(),
        all_eigenvalues: est.eigenvalues.clone(),
        method,
        column_standardization: params,
        score_scales: DVector::from_element(k, 1.0),
    };
    let s = scores(&model, x)?;
    let mut scales = Vec::with_capacity(k);
    for (j, col) in s.column_iter().enumerate() {
        let v: Vec<f64> = col.iter().copied().collect();
        let spread = match options.score_scale {
            ScoreScale::StandardDeviation => numeric::sample_sd(&v),
            ScoreScale::Mad => MAD_CONSISTENCY * numeric::mad(&v)?.1,
            ScoreScale::RawMad => numeric::mad(&v)?.1,
        };
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::Numeric(format!("score column {j} has zero spread")));
        }
        scales.push(spread);
    }
    model.score_scales = DVector::from_vec(scales);
    Ok(model)
}

/// `n x k` matrix of projections `s_ij = z_i^T v_j`.
pub fn scores(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(model.centered(x)? * &model.loadings)
}

pub fn score_distance(s: &DVector<f64>, scales: &DVector<f64>) -> Result<f64> {
    if s.len() != scales.len() {
        return Err(Error::DimensionMismatch { expected: scales.len(), found: s.len() });
    }
    if scales.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("score scales must be positive".into()));
    }
    Ok(s.iter().zip(scales.iter()).map(|(a, b)| (a / b).powi(2)).sum::<f64>().sqrt())
}

/// `|z - V s|` for a standardized, centered observation `z`.
pub fn orthogonal_distance(z: &DVector<f64>, model: &PcaModel, s: &DVector<f64>) -> Result<f64> {
    let (p, k) = model.loadings.shape();
    if z.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: z.len() });
    }
    if s.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: s.len() });
    }
    Ok((z - &model.loadings * s).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierFlag {
    Regular,
    OrthogonalOutlier,
    ScoreOutlier,
    BadLeverage,
}

impl OutlierFlag {
    pub fn classify(sd_high: bool, od_high: bool) -> Self {
        match (sd_high, od_high) {
            (false, false) => OutlierFlag::Regular,
            (false, true) => OutlierFlag::OrthogonalOutlier,
            (true, false) => OutlierFlag::ScoreOutlier,
            (true, true) => OutlierFlag::BadLeverage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierMapRow {
    pub index: usize,
    pub sd: f64,
    pub od: f64,
    pub sd_cutoff: f64,
    pub od_cutoff: f64,
    pub flag: OutlierFlag,
}

/// `sqrt` of the chi-squared quantile with `k` degrees of freedom.
pub fn sd_cutoff(k: usize) -> Result<f64> {
    Ok(numeric::chi_squared_quantile(k as f64, CUTOFF_LEVEL)?.sqrt())
}

/// Normal quantile on the 2/3 power of the orthogonal distances, mapped back.
pub fn od_cutoff(od: &[f64]) -> Result<f64> {
    let t: Vec<f64> = od.iter().map(|d| d.powf(2.0 / 3.0)).collect();
    let (med, mad) = numeric::mad(&t)?;
    let q = med + MAD_CONSISTENCY * mad * numeric::normal_quantile(CUTOFF_LEVEL);
    Ok(q.max(0.0).powf(1.5))
}

pub fn outlier_map(x: &DMatrix<f64>, k: usize, method: RadialMethod) -> Result<Vec<OutlierMapRow>> {
    let model = fit_pca(x, k, method)?;
    outlier_map_for(&model, x)
}

/// Outlier map of `x` under an already fitted model.
pub fn outlier_map_for(model: &PcaModel, x: &DMatrix<f64>) -> Result<Vec<OutlierMapRow>> {
    let z = model.centered(x)?;
    let s = &z * &model.loadings;
    let scale = z.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let floor = 1e-12 * scale;
    let mut sds = Vec::with_capacity(x.nrows());
    let mut ods = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let si = s.row(i).transpose();
        sds.push(score_distance(&si, &model.score_scales)?);
        let od = orthogonal_distance(&z.row(i).transpose(), model, &si)?;
        // rounding residue of points lying in the subspace
        ods.push(if od <= floor { 0.0 } else { od });
    }
    let sd_cut = sd_cutoff(model.components())?;
    let od_cut = od_cutoff(&ods)?;
    Ok(sds
        .into_iter()
        .zip(ods)
        .enumerate()
        .map(|(index, (sd, od))| OutlierMapRow {
            index,
            sd,
            od,
            sd_cutoff: sd_cut,
            od_cutoff: od_cut,
            flag: OutlierFlag::classify(sd > sd_cut, od > od_cut),
        })
        .collect())
}

/// Cumulative fraction of the total eigenvalue mass.
pub fn variance_explained(eigenvalues: &DVector<f64>) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().sum();
    let mut acc = 0.0;
    eigenvalues
        .iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn plain(method: RadialMethod) -> PcaOptions {
        PcaOptions { standardization: Standardization::None, ..PcaOptions::for_method(method) }
    }

    #[test]
    fn constant_column_is_rejected() {
        let mut x = gaussian(20, 3, 0);
        x.column_mut(1).fill(4.0);
        for mode in [Standardization::Robust, Standardization::Classical] {
            assert!(matches!(standardize(&x, mode), Err(Error::DegenerateColumn { column: 1 })));
        }
    }

    #[test]
    fn robust_standardization_is_idempotent_and_invertible() {
        let x = gaussian(41, 4, 1) * 3.0;
        let (z, params) = standardize(&x, Standardization::Robust).unwrap();
        let (z2, _) = standardize(&z, Standardization::Robust).unwrap();
        assert!((&z2 - &z).amax() < 1e-12);
        assert!((params.invert(&z).unwrap() - &x).amax() < 1e-12);
        let (zc, pc) = standardize(&x, Standardization::Classical).unwrap();
        assert!((pc.invert(&zc).unwrap() - &x).amax() < 1e-12);
    }

    #[test]
    fn score_distance_examples() {
        assert_eq!(score_distance(&dvector![3.0, 4.0], &dvector![1.0, 1.0]).unwrap(), 5.0);
        assert_eq!(score_distance(&dvector![0.0, 0.0], &dvector![1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(score_distance(&dvector![2.0, 0.0, 0.0], &dvector![2.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(score_distance(&dvector![1.0], &dvector![0.0]).is_err());
    }

    fn axis_model() -> PcaModel {
        PcaModel {
            center: DVector::zeros(2),
            loadings: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            eigenvalues: dvector![1.0],
            all_eigenvalues: dvector![1.0, 0.5],
            method: RadialMethod::Classical,
            column_standardization: ColumnScaling::identity(2),
            score_scales: dvector![1.0],
        }
    }

    #[test]
    fn orthogonal_distance_examples() {
        let m = axis_model();
        let z = dvector![3.0, 4.0];
        let s = m.loadings.transpose() * &z;
        assert_eq!(orthogonal_distance(&z, &m, &s).unwrap(), 4.0);
        let inside = dvector![-2.0, 0.0];
        assert_eq!(orthogonal_distance(&inside, &m, &(m.loadings.transpose() * &inside)).unwrap(), 0.0);
        let ortho = dvector![0.0, 7.0];
        assert_eq!(orthogonal_distance(&ortho, &m, &dvector![0.0]).unwrap(), 7.0);
    }

    #[test]
    fn scores_of_loadings_are_unit_vectors() {
        let x = gaussian(60, 4, 2);
        let model = fit_pca_with(&x, 2, RadialMethod::Winsor, &plain(RadialMethod::Winsor)).unwrap();
        let mut probe = DMatrix::<f64>::zeros(1, 4);
        probe.set_row(0, &(model.loadings.column(0) + &model.center).transpose());
        let s = scores(&model, &probe).unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 1e-12 && s[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn classical_matches_textbook_pca() {
        let x = gaussian(80, 5, 3) * DMatrix::from_diagonal(&dvector![5.0, 3.0, 2.0, 1.0, 0.5]);
        let model = fit_pca_with(&x, 3, RadialMethod::Classical, &plain(RadialMethod::Classical)).unwrap();
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut r in c.row_iter_mut() {
            r -= &mean;
        }
        let svd = c.svd(false, true);
        let vt = svd.v_t.unwrap();
        for j in 0..3 {
            let a = model.loadings.column(j);
            let b = vt.row(j).transpose();
            assert!((a.dot(&b).abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn planar_data_has_zero_orthogonal_distance() {
        let coef = gaussian(50, 2, 4);
        let basis = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 3.0]);
        let x = coef * basis;
        let model = fit_pca_with(&x, 2, RadialMethod::Ball, &plain(RadialMethod::Ball)).unwrap();
        let rows = outlier_map_for(&model, &x).unwrap();
        assert!(rows.iter().all(|r| r.od == 0.0 && r.flag != OutlierFlag::OrthogonalOutlier));
    }

    #[test]
    fn full_rank_reconstructs() {
        let x = gaussian(30, 4, 5);
        for method in [RadialMethod::Classical, RadialMethod::Lr] {
            let model = fit_pca(&x, 4, method).unwrap();
            let z = model.centered(&x).unwrap();
            let s = scores(&model, &x).unwrap();
            assert!((&z - &s * model.loadings.transpose()).amax() < 1e-10);
            assert!(outlier_map_for(&model, &x).unwrap().iter().all(|r| r.od < 1e-10));
        }
    }

    #[test]
    fn orthogonal_outliers_stand_out() {
        let mut x = gaussian(200, 5, 6) * DMatrix::from_diagonal(&dvector![6.0, 5.0, 4.0, 0.3, 0.3]);
        for i in 0..10 {
            x[(i, 3)] = 12.0 + i as f64;
            x[(i, 4)] = -10.0;
        }
        let rows = outlier_map(&x, 3, RadialMethod::Lr).unwrap();
        let mut by_od: Vec<&OutlierMapRow> = rows.iter().collect();
        by_od.sort_by(|a, b| b.od.total_cmp(&a.od));
        let top: Vec<usize> = by_od[..10].iter().map(|r| r.index).collect();
        assert!(top.iter().all(|&i| i < 10), "{top:?}");
        assert!(rows[..10].iter().all(|r| r.od > r.od_cutoff));
    }

    #[test]
    fn clean_data_is_mostly_regular() {
        let x = gaussian(1000, 4, 7);
        for method in [RadialMethod::Classical, RadialMethod::Winsor, RadialMethod::Shell] {
            let rows = outlier_map(&x, 3, method).unwrap();
            let regular = rows.iter().filter(|r| r.flag == OutlierFlag::Regular).count();
            // two 2.5% tails; lower binomial 3-sigma limit of ~95%
            assert!(regular as f64 >= 1000.0 * 0.95 - 3.0 * (1000.0f64 * 0.05 * 0.95).sqrt(), "{method}: {regular}");
        }
    }

    #[test]
    fn variance_explained_is_cumulative() {
        let v = variance_explained(&dvector![3.0, 1.0]);
        assert_eq!(v, vec![0.75, 1.0]);
    }

    fn principal_angle_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        // largest sine of the principal angles between two orthonormal bases
        let proj = a - b * (b.transpose() * a);
        proj.singular_values().max()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn subspace_is_orthogonally_equivariant(seed in 0u64..1000, angles in prop::collection::vec(0.0f64..6.283, 2), m in 0usize..7) {
            let method = RadialMethod::ALL[m];
            let x = gaussian(80, 3, seed) * DMatrix::from_diagonal(&dvector![4.0, 2.0, 0.5]);
            let mut h = DMatrix::<f64>::identity(3, 3);
            for (k, &t) in angles.iter().enumerate() {
                let (i, j) = [(0, 1), (1, 2)][k];
                let mut g = DMatrix::<f64>::identity(3, 3);
                let (s, c) = t.sin_cos();
                g[(i, i)] = c; g[(j, j)] = c; g[(i, j)] = -s; g[(j, i)] = s;
                h = g * h;
            }
            let a = fit_pca_with(&x, 2, method, &plain(method)).unwrap();
            let b = fit_pca_with(&(&x * h.transpose()), 2, method, &plain(method)).unwrap();
            let rotated = &h * &a.loadings;
            prop_assert!(principal_angle_sine(&rotated, &b.loadings) < 1e-6);
        }

        #[test]
        fn loadings_are_orthonormal(seed in 0u64..1000, k in 1usize..5, m in 0usize..7) {
            let method = RadialMethod::ALL[m];
            let model = fit_pca(&gaussian(40, 4, seed), k, method).unwrap();
            let gram = model.loadings.transpose() * &model.loadings;
            prop_assert!((gram - DMatrix::<f64>::identity(k, k)).amax() < 1e-10);
            for w in model.eigenvalues.as_slice().windows(2) {
                prop_assert!(w[0] >= w[1] && w[1] >= 0.0);
            }
        }

        #[test]
        fn score_distance_is_scale_free(s in prop::collection::vec(-10.0f64..10.0, 3), sc in prop::collection::vec(0.1f64..5.0, 3), c in 0.01f64..100.0) {
            let s = DVector::from_vec(s);
            let sc = DVector::from_vec(sc);
            let a = score_distance(&s, &sc).unwrap();
            let b = score_distance(&(&s * c), &(&sc * c)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn flags_partition_by_cutoffs() {
        let x = gaussian(300, 4, 8);
        for r in outlier_map(&x, 2, RadialMethod::Quad).unwrap() {
            assert_eq!(r.flag, OutlierFlag::classify(r.sd > r.sd_cutoff, r.od > r.od_cutoff));
        }
        assert_relative_eq!(sd_cutoff(1).unwrap(), 2.241402727604947, max_relative = 1e-9);
    }
}
