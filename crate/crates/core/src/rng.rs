//! Seeded random number generation.
//!
//! Algorithm `ccm-rng-v1`: a 64-bit seed is expanded into a 256-bit ChaCha
//! key with four SplitMix64 steps (little-endian words), and the generator is
//! ChaCha with 8 rounds. Splitting derives child generator `k` by selecting
//! ChaCha stream `k` under the same key, so `split(seed, k)` streams never
//! overlap and do not depend on how many siblings are drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name and version of the generator construction.
pub const RNG_ALGORITHM: &str = "ccm-rng-v1 (splitmix64 key expansion, chacha8, stream split)";

pub type CcmRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Root generator for `seed` (stream 0).
pub fn seeded(seed: u64) -> CcmRng {
    ChaCha8Rng::from_seed(key_from_seed(seed))
}

/// Child generator `index` derived from `seed`.
pub fn split(seed: u64, index: u64) -> CcmRng {
    let mut rng = seeded(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed (for APIs that take a plain seed) from `seed` and `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut state)
}
