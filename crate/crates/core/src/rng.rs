//! Seed derivation and seeded shuffling.
//!
//! Every stochastic step in the crate draws from a [`Xoshiro256PlusPlus`]
//! generator. Generators are created with `seed_from_u64`, which expands the
//! 64-bit seed through SplitMix64. Child seeds are derived from a master seed
//! and a list of integer tags with the SplitMix64 finaliser, so the stream
//! used by (fold 3, tree 17) never depends on how many other streams were
//! consumed before it, nor on thread scheduling.
//!
//! Shuffles are Fisher-Yates from the last index down. The swap partner for
//! position `i` is `(next_u64() as u128 * (i + 1) as u128) >> 64`, the
//! multiply-shift bounded draw. This is spelled out so other implementations
//! can reproduce the same permutation bit for bit.

use rand::{RngCore, SeedableRng};
pub use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(master.wrapping_add(GOLDEN_GAMMA)), |acc, &t| {
        mix64(acc ^ mix64(t.wrapping_add(GOLDEN_GAMMA)))
    })
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Uniform integer in `0..bound` by multiply-shift. `bound` must be nonzero.
pub fn bounded(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = bounded(rng, i + 1);
        items.swap(i, j);
    }
}

/// `0..n` in a seeded Fisher-Yates order.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut rng_from_seed(seed), &mut idx);
    idx
}
