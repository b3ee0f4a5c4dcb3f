//! Distribution of a squared Gaussian norm and the normal-quantile
//! transforms used to place the Q3 cutoff.

use gsscm::coga::{wh_experiment, CogaDistribution, MadScaling, Transform};
use gsscm::spectrum::EigenSetting;

fn main() -> gsscm::error::Result<()> {
    let lambda = EigenSetting::Linear.eigenvalues(5);
    let d = CogaDistribution::squared_norm(&lambda)?;
    println!("|X|^2 with X ~ N(0, diag{lambda:?})");
    println!("  mean {:.3}  variance {:.3}", d.mean(), d.variance());
    for q in [0.25, 0.5, 0.75, 0.95] {
        println!("  quantile {q:.2}: {:.4}", d.quantile(q)?);
    }

    let rows = wh_experiment(&[2, 5, 10, 20], EigenSetting::Quadratic, 100_000, 1, MadScaling::Consistent)?;
    println!("\nF(Q3^2) under quadratic eigenvalues (target 0.75)");
    for t in Transform::ALL {
        let vals: Vec<String> = rows
            .iter()
            .filter(|r| r.transform == t)
            .map(|r| format!("p={:<3}{:.4}", r.p, r.f_coga_at_q3sq))
            .collect();
        println!("  {:<16}{}", t.name(), vals.join("  "));
    }
    Ok(())
}
