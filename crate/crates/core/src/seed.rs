//! Deterministic seed derivation.
//!
//! Every source of randomness in the toolkit is a ChaCha stream seeded from
//! a single master seed through [`derive`]. Parallel and serial execution see
//! the same per-unit streams, so results are independent of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of tags.
///
/// The same `(master, tags)` pair always yields the same child, and distinct
/// tag paths yield distinct children for all practical purposes.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    let mut state = mix(master ^ 0x7465_7877_6574_0001); // domain separator
    for &t in tags {
        state = mix(state ^ mix(t));
    }
    state
}

/// Seeded RNG for a derived stream.
pub fn rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tags))
}
