//! Seeded random streams.
//!
//! All stochastic stages draw from ChaCha8 streams keyed by `(base seed,
//! record index)`, so any record can be regenerated independently and the
//! whole dataset is reproducible across runs and thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeedRng = ChaCha8Rng;

/// RNG for a top-level seed.
pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of record `index` in a generation run.
pub fn record_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}
