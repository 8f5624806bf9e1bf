//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is the
//! user seed and whose stream id is a SplitMix64 hash of a small tuple of
//! coordinates (block tag, row, column, trial, ...). Values therefore do not
//! depend on the order in which entries are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-sensitive hash of a coordinate tuple.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seed for an independent sub-experiment (trial, size, ...).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    mix64(seed ^ stream_id(parts))
}

/// Factory for keyed streams sharing one seed.
#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, parts: &[u64]) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(stream_id(parts));
        rng.set_word_pos(0);
        rng
    }
}

/// Tags separating the streams of different samplers under one seed.
pub mod tag {
    pub const BLOCK_ENTRY: u64 = 1;
    pub const QUATERNION_A: u64 = 2;
    pub const QUATERNION_B: u64 = 3;
    pub const CORRELATED_A: u64 = 4;
    pub const CORRELATED_B: u64 = 5;
    pub const COVARIANCE: u64 = 6;
    pub const PERTURBATION: u64 = 7;
    pub const ATOM_DRAWS: u64 = 8;
    pub const DECOUPLING: u64 = 9;
    pub const MONTE_CARLO: u64 = 10;
}
