//! Seed-derived random streams.
//!
//! Every logical task (an iteration, an isolation repetition, a group test
//! inside it) draws from its own stream keyed by a path of integers under the
//! master seed. Running tasks in any order, on any number of threads, visits
//! identical randomness per task.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a master seed and a task path into a 64-bit stream key.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_key(master, path))
}

/// Uniform double in `(0, 1]` derived from a hash, used for counter-based noise.
#[inline]
pub(crate) fn hash_unit(key: u64) -> f64 {
    // 53 random bits; adding one keeps the value away from zero for Box-Muller.
    ((splitmix64(key) >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}
