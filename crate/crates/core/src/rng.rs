//! Seed-stream derivation.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] derived
//! from a 64-bit master seed plus a `(purpose tag, index)` pair. Streams for
//! different tags or indices are independent, and a given stream is the same
//! no matter which thread consumes it or in what order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One step of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the 64-bit seed of stream `(tag, index)` under `master`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let a = splitmix64(master ^ splitmix64(tag_hash(tag)));
    splitmix64(a ^ splitmix64(index.wrapping_add(GOLDEN)))
}

/// Builds the generator for stream `(tag, index)` under `master`.
pub fn stream(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}

/// Generator seeded directly from a 64-bit seed.
pub fn from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
