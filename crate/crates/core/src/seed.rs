//! Counter-based seed derivation.
//!
//! Every random choice in the crate is made from a child seed obtained by
//! [`derive`]: the parent seed keys a ChaCha8 generator and the child index
//! selects its stream, so siblings are independent and the whole tree of
//! seeds is a pure function of the master seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tags occupy the top 16 bits of a derivation index.
pub mod tag {
    pub const RELABEL: u64 = 1;
    pub const ROUND_SIGNS: u64 = 2;
    pub const TRACKER: u64 = 3;
    pub const TRACKER_ROW: u64 = 4;
    pub const HH1_GENERATION: u64 = 5;
    pub const CS_ROW: u64 = 6;
    pub const BP_ROUTING: u64 = 7;
    pub const BP_AUX: u64 = 8;
    pub const BP_CELL: u64 = 9;
    pub const BP_EPOCH: u64 = 10;
    pub const STREAM: u64 = 11;
    pub const TRIAL: u64 = 12;
    pub const SUP_TRIAL: u64 = 13;
}

/// Derive the child seed `(tag, index)` of `parent`.
pub fn derive(parent: u64, tag: u64, index: u64) -> u64 {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(parent);
    rng.set_stream((tag << 48) | index);
    rng.next_u64()
}

/// A generator keyed by `seed`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
