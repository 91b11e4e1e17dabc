//! Seeding and stream splitting.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`]. Child
//! generators are derived from a parent seed and a path of stream labels:
//!
//! ```text
//! child_seed = splitmix64-fold(parent_seed, label_0, label_1, ...)
//! rng        = ChaCha8Rng::seed_from_u64(child_seed)
//! ```
//!
//! The fold applies one SplitMix64 finalizer per label, so distinct paths give
//! statistically unrelated generators and results never depend on how work is
//! scheduled across threads. The stream labels used by the crate are the
//! constants in [`stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels. Replicate, restart and network indices are appended after
/// these.
pub mod stream {
    pub const SIMULATE: u64 = 0x5349_4d00;
    pub const POSITIONS: u64 = 0x504f_5300;
    pub const EDGES: u64 = 0x4544_4700;
    pub const RESTART: u64 = 0x5253_5400;
    pub const INIT: u64 = 0x494e_4900;
    pub const GIBBS: u64 = 0x4749_4200;
    pub const NULL_SIM: u64 = 0x4e55_4c00;
    pub const REPLICATE: u64 = 0x5245_5000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` along `path`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the child stream at `path` below `seed`.
pub fn child_rng(seed: u64, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(seed, path))
}
