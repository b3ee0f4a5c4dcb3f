//! Spatial median and k-step LTS under a growing cluster of outliers.

use gsscm::location::{kstep_lts, lts_objective, mean, spatial_median, CSteps, DEFAULT_MAX_ITER, DEFAULT_TOL};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gsscm::error::Result<()> {
    let (n, p) = (200, 2);
    let mut rng = gsscm::rng::stream(7, &[]);
    let clean = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));

    println!("{:>5} {:>10} {:>10} {:>10}", "out%", "mean", "spatial", "lts(5)");
    for pct in [0, 10, 20, 30, 40, 49] {
        let mut x = clean.clone();
        for i in 0..n * pct / 100 {
            x[(i, 0)] = 50.0;
            x[(i, 1)] = 50.0;
        }
        let m = mean(&x)?.norm();
        let s = spatial_median(&x, DEFAULT_TOL, DEFAULT_MAX_ITER)?.center.norm();
        let l = kstep_lts(&x, CSteps::Fixed(5))?.center.norm();
        println!("{pct:>5} {m:>10.3} {s:>10.3} {l:>10.3}");
    }

    // each C-step can only lower the trimmed objective
    let start = spatial_median(&clean, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mut t = start.center;
    for k in 0..5 {
        println!("step {k}: objective {:.6}", lts_objective(&clean, &t));
        t = gsscm::location::c_step(&clean, &t)?;
    }
    Ok(())
}
