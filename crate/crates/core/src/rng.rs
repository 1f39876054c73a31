//! Stable seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`
//! that is derived by hashing a parent seed together with a label (a window
//! id, a pass index, an epoch). The hash is fixed here so derived streams are
//! identical across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives a child seed from `seed` and an integer label.
pub fn derive(seed: u64, label: u64) -> u64 {
    mix64(mix64(seed) ^ label.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Derives a child seed from `seed` and a string label.
pub fn derive_str(seed: u64, label: &str) -> u64 {
    mix64(fnv1a(label.as_bytes(), FNV_OFFSET ^ mix64(seed)))
}

/// Seed for stochastic pass `pass` over the window `id`.
///
/// Depends only on `(seed, id, pass)`, so scoring a pool gives every window
/// the same masks no matter how the pool is ordered.
pub fn pass_seed(seed: u64, id: &str, pass: usize) -> u64 {
    derive(derive_str(seed, id), pass as u64)
}

/// Uniform draw in `[0, 1)` from the top 53 bits of a hash.
pub fn unit_f64(hash: u64) -> f64 {
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
