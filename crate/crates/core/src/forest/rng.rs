//! Per-tree random streams.
//!
//! Every tree owns a ChaCha8 generator keyed by `tree_seed(master, index)`.
//! ChaCha is counter-based, so the two streams a tree uses are selected with
//! `set_stream` rather than by consuming values: stream 0 draws the bootstrap
//! sample, stream 1 the per-node feature subsets in depth-first node order
//! (node, left subtree, right subtree). No state is shared between trees, so
//! training is independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const BOOTSTRAP_STREAM: u64 = 0;
pub(crate) const FEATURE_STREAM: u64 = 1;

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of tree `index` under master seed `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    mix64(seed ^ mix64((index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub(crate) fn stream(tree_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
    rng.set_stream(stream);
    rng
}
