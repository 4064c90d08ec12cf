//! Deterministic sub-seed derivation.
//!
//! Every random draw in an experiment comes from a generator seeded by a
//! path such as `(master, task, step, model)`, so results do not depend on
//! execution order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Stream tags that keep sub-seeds of different purposes apart.
pub mod tag {
    pub const TASK: u64 = 1;
    pub const INIT: u64 = 2;
    pub const INNER: u64 = 3;
    pub const META_SAMPLE: u64 = 4;
    pub const META_INNER: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const PROTOTYPES: u64 = 7;
}
