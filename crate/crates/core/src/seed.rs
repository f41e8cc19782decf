//! Seeding helpers.
//!
//! Every stochastic component draws from SplitMix64 (Steele, Lea and Flood,
//! 2014), the generator also used to seed the xoshiro family. Sub-seeds are
//! derived by feeding a parent seed and a tag through the SplitMix64 output
//! function, so the streams are reproducible from any language that can
//! implement the twelve-line reference generator.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function applied to `z`.
pub fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an integer tag.
pub fn derive(parent: u64, tag: u64) -> u64 {
    mix64(mix64(parent) ^ tag)
}

/// Derives a child seed from a chain of tags, left to right.
pub fn derive_all(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(parent, |acc, &t| derive(acc, t))
}

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}
