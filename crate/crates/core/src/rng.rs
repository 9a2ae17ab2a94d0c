//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 seeded through `seed_from_u64`,
//! so results are reproducible across platforms. Independent consumers derive
//! their own stream with [`substream`] instead of sharing one generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a generator for a named purpose from a base seed.
pub fn substream(seed: u64, tag: u64) -> Rng {
    // splitmix64 finalizer to decorrelate nearby (seed, tag) pairs
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}
