//! Seed derivation for reproducible per-item random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from a global seed plus an item key, so results never depend on
//! the order in which items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream belonging to item `index` under `global_seed`.
pub fn derive_seed(global_seed: u64, index: u64) -> u64 {
    mix64(mix64(global_seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(global_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global_seed, index))
}
