pub mod cli;
pub mod coga;
pub mod error;
pub mod influence;
pub mod io;
pub mod location;
pub mod numeric;
pub mod pca;
pub mod radial;
pub mod rng;
pub mod scatter;
pub mod sim;
pub mod spectrum;
