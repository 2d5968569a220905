//! Deterministic randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 stream seeded with a
//! 64-bit integer through `SeedableRng::seed_from_u64`. ChaCha output is
//! specified bit-for-bit, so a seed reproduces the same graphs, splits and
//! trajectories on every platform. Independent sub-streams are derived with
//! a SplitMix64 finaliser over `(seed, stream id)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
