//! A reduced version of the contaminated-Gaussian study, printed as CSV.
//!
//! Pass a TOML file to run a custom grid:
//!
//! ```bash
//! cargo run --release --example simulation_study -- study.toml
//! ```

use gsscm::sim::{run_study, StudyConfig};

fn main() -> gsscm::error::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => StudyConfig::load(path.as_ref())?,
        None => StudyConfig::from_toml(
            r#"
            settings = ["linear"]
            eps = [0.0, 0.2]
            gammas = [2, 64]
            replications = 50
            "#,
        )?,
    };
    let records = run_study(&config)?;
    gsscm::io::write_records(std::io::stdout().lock(), &records)
}
