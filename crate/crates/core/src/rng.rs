//! Seed derivation.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] seeded
//! with a `u64`. Sub-streams are derived, never shared: the seed for child
//! `index` of a stream with seed `parent` is
//!
//! ```text
//! derive(parent, index) = splitmix64(parent ^ splitmix64(index ^ STREAM_SALT))
//! ```
//!
//! Replication `r` of a run uses `derive(master_seed, r)`, fold `k` of a
//! cross-validation uses `derive(seed, k)`, tree `t` of a forest uses
//! `derive(fit_seed, t)`, and so on. Results therefore depend only on indices,
//! never on which thread did the work or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const STREAM_SALT: u64 = 0x6a09_e667_f3bc_c909;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` under `parent`.
#[inline]
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index ^ STREAM_SALT))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named sub-streams used inside one (replication, n) cell.
pub mod stream {
    pub const DATA: u64 = 0;
    pub const FOLDS: u64 = 1;
    pub const CV_FITS: u64 = 2;
    pub const FULL_FIT: u64 = 3;
    pub const ORACLE: u64 = 4;
}
