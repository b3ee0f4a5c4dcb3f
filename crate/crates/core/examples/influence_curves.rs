//! Diagonal influence function along (z, z) for each method.

use gsscm::influence::{if_grid, Direction};
use gsscm::radial::RadialMethod;

fn main() -> gsscm::error::Result<()> {
    let z: Vec<f64> = vec![0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0];
    print!("{:>8}", "z");
    for m in RadialMethod::ALL {
        print!("{:>10}", m.name());
    }
    println!();
    let grids: Vec<_> = RadialMethod::ALL
        .iter()
        .map(|&m| if_grid(m, Direction::DiagXy, &z, true))
        .collect::<Result<_, _>>()?;
    for (i, zi) in z.iter().enumerate() {
        print!("{zi:>8}");
        for g in &grids {
            print!("{:>10.4}", g[i].s11);
        }
        println!();
    }
    Ok(())
}
