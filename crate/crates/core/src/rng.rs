//! Seed splitting.
//!
//! Every random draw in the crate comes from a ChaCha stream selected by a
//! `(seed, stream)` pair. ChaCha is counter based, so two sub-tasks with
//! different stream ids are independent and can run in any order without
//! changing each other's output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used across the crate. Kept in one place so they never collide.
pub mod stream {
    pub const PARENTS: u64 = 1;
    pub const CHILDREN: u64 = 2;
    pub const MARKS: u64 = 3;
    pub const THINNING: u64 = 4;
    pub const INIT: u64 = 5;
    pub const BLUR: u64 = 6;
    pub const SEARCH: u64 = 7;
    pub const INTENSITY: u64 = 8;
    pub const BOOTSTRAP: u64 = 9;
    pub const OUTPUTS: u64 = 10;
}

pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives the seed of the `index`-th independent run from a base seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
