//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a base seed and a path of
//! counters (trial index, time step, stream tag). Derived seeds depend only on
//! the key, so work scheduled in any order or on any thread reproduces the
//! serial result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used when deriving sub-seeds.
pub mod stream {
    pub const MEMBERSHIP: u64 = 0x6d656d62;
    pub const SNAPSHOT: u64 = 0x736e6170;
    pub const KMEANS: u64 = 0x6b6d6e73;
    pub const TRIAL: u64 = 0x7472696c;
    pub const EIGEN: u64 = 0x6569676e;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from `base` and a counter path.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Seeded generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
