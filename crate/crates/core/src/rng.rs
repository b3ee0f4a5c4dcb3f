//! Seeding contract.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (from `rand_chacha`)
//! seeded with a 64-bit value. Child streams are derived from a base seed and
//! a list of stream identifiers (replication index, grid cell, ...) by folding
//! them through the SplitMix64 finalizer, so results never depend on how work
//! is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_180_517;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of stream identifiers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
