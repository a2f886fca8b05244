//! Deterministic seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a, then mixed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(h)
}

/// Derives a 64-bit seed from a master seed, an index and a stream label.
///
/// Streams with different labels or indices are statistically independent,
/// so adding a new consumer never perturbs the draws of existing ones.
pub fn derive_seed(master: u64, index: u64, label: &str) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN_GAMMA));
    let b = mix64(a ^ index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1));
    mix64(b ^ hash_label(label))
}

pub fn stream_rng(master: u64, index: u64, label: &str) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(master, index, label))
}
