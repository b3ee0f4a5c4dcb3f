//! How many replaced points the scatter estimate withstands.

use gsscm::radial::RadialMethod;
use gsscm::sim::{breakdown_experiment, Placement};

fn main() -> gsscm::error::Result<()> {
    let (n, p) = (100, 10);
    let lambda = 1e6;
    println!("n = {n}, p = {p}, replaced points at magnitude {lambda:e}");
    println!("{:>4} {:>14} {:>14} {:>14}", "m", "lambda_min", "lambda_max", "location shift");
    for m in [0, 20, 40, 44, 45, 46, 50] {
        let r = breakdown_experiment(n, p, m, lambda, RadialMethod::Lr, 1, Placement::Spread)?;
        println!("{m:>4} {:>14.4e} {:>14.4e} {:>14.4e}", r.lambda_min, r.lambda_max, r.location_shift);
    }
    Ok(())
}
