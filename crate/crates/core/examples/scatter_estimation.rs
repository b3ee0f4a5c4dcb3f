//! Every radial function on the same contaminated sample.
//!
//! ```bash
//! cargo run --release --example scatter_estimation
//! ```

use gsscm::influence::GaussianModel;
use gsscm::radial::RadialMethod;
use gsscm::scatter::{gsscm, LocationMode};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gsscm::error::Result<()> {
    let (n, p) = (500, 3);
    let sd = DVector::from_vec(vec![3.0, 2.0, 1.0]);
    let mut rng = gsscm::rng::stream(gsscm::rng::DEFAULT_SEED, &[1]);
    let mut x = DMatrix::from_fn(n, p, |_, j| sd[j] * rng.sample::<f64, _>(StandardNormal));
    // 10% of the rows sit far out along the smallest axis
    for i in 0..n / 10 {
        x.set_row(i, &DVector::from_vec(vec![0.0, 0.0, 25.0]).transpose());
    }

    let model = GaussianModel::new(p)?;
    println!("true eigenvalues: 9 4 1");
    for method in RadialMethod::ALL {
        let est = gsscm(&x, method, &LocationMode::default())?;
        let c = model.consistency_factor(method);
        let eig: Vec<String> = est.eigenvalues.iter().map(|v| format!("{:8.3}", v / c)).collect();
        println!("{:<9} {}", method.name(), eig.join(" "));
    }
    Ok(())
}
