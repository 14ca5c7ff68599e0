//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from `derive_seed(run_seed, stream, index)`, so per-item streams
//! are independent of iteration order and of any thread partitioning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of `(run_seed, stream, index)`.
pub fn derive_seed(run_seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(run_seed) ^ stream) ^ index)
}

pub fn rng_for(run_seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(run_seed, stream, index))
}

/// Named streams, so unrelated consumers of one run seed never collide.
pub mod stream {
    pub const LABELS: u64 = 1;
    pub const USER: u64 = 2;
    pub const B_LABELS: u64 = 3;
    pub const BIPARTITE: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const PROPAGATION: u64 = 6;
    pub const RANDOMIZE: u64 = 7;
    pub const SHUFFLE: u64 = 8;
}
