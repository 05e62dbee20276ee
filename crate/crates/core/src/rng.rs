//! Seeded randomness.
//!
//! All stochastic steps draw from SplitMix64 streams. Gaussian variates use
//! the Box-Muller transform with exactly two uniform draws per variate
//! (the cosine branch), so a given seed yields the same noise in any
//! implementation of the same recipe.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
pub use rand_xoshiro::SplitMix64;

/// Creates the stream for `seed`.
pub fn stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Mixes a base seed with a tag into an independent child seed
/// (SplitMix64 finalizer over `base ^ golden * (tag + 1)`).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed keyed by a string (item ids, writer ids).
pub fn derive_seed_str(base: u64, tag: &str) -> u64 {
    // FNV-1a, stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(base, h)
}

/// Uniform in [0, 1) with 53 bits of precision.
pub fn unit_f64(rng: &mut impl Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

/// Standard normal variate via Box-Muller.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    // u1 in (0, 1] keeps the log finite.
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn normal(rng: &mut impl Rng, mean: f64, sigma: f64) -> f64 {
    mean + sigma * standard_normal(rng)
}

pub fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    items.shuffle(rng);
}
