//! Outlier map of a five-dimensional sample with a three-dimensional signal,
//! classical versus robust principal components.

use gsscm::pca::{fit_pca, outlier_map_for, variance_explained, OutlierFlag};
use gsscm::radial::RadialMethod;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gsscm::error::Result<()> {
    let n = 300;
    let sd = DVector::from_vec(vec![6.0, 4.0, 3.0, 0.4, 0.4]);
    let mut rng = gsscm::rng::stream(3, &[]);
    let mut x = DMatrix::from_fn(n, 5, |_, j| sd[j] * rng.sample::<f64, _>(StandardNormal));
    for i in 0..15 {
        // off the signal subspace
        x[(i, 3)] = 8.0;
        x[(i, 4)] = 8.0;
    }
    for i in 15..25 {
        // far along the first axis and off the subspace
        x[(i, 0)] = 60.0;
        x[(i, 4)] = -10.0;
    }

    for method in [RadialMethod::Classical, RadialMethod::Lr] {
        let model = fit_pca(&x, 3, method)?;
        let rows = outlier_map_for(&model, &x)?;
        let count = |f: OutlierFlag| rows.iter().filter(|r| r.flag == f).count();
        let cum = variance_explained(&model.all_eigenvalues);
        println!("{method}: {:.1}% explained by 3 components", 100.0 * cum[2]);
        println!(
            "  regular {}  orthogonal {}  score {}  bad leverage {}",
            count(OutlierFlag::Regular),
            count(OutlierFlag::OrthogonalOutlier),
            count(OutlierFlag::ScoreOutlier),
            count(OutlierFlag::BadLeverage)
        );
        let planted = rows[..25].iter().filter(|r| r.flag != OutlierFlag::Regular).count();
        println!("  planted outliers flagged: {planted}/25");
    }
    Ok(())
}
