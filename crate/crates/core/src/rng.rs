//! Seeded randomness. Every stochastic step draws from a ChaCha stream
//! whose seed is derived from a parent seed and a stream index, so work
//! units can run in any order and still give identical results.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with a stream index into an independent child seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// A child generator for stream `stream` of `seed`.
pub fn child(seed: u64, stream: u64) -> Rng {
    rng(derive_seed(seed, stream))
}

/// Stable 64-bit FNV-1a hash, used to key streams by sample id.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
