//! Deterministic stream derivation for Monte-Carlo work.
//!
//! Every independent unit of work (a construction sample, a pool, a strand)
//! draws from its own ChaCha stream keyed by a tuple of integers, so results do
//! not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a key tuple into one 64-bit seed (splitmix64 finalizer per part).
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN, |acc, &p| {
        mix(acc.wrapping_add(GOLDEN) ^ mix(p.wrapping_add(GOLDEN)))
    })
}

pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parts))
}

/// Stable integer key for a probability, used when it participates in a seed.
pub fn delta_key(delta: f64) -> u64 {
    delta.to_bits()
}
