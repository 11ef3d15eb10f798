//! Seeded randomness. Every stochastic routine in the crate draws from
//! ChaCha20 seeded with a 64-bit value, so datasets and runs reproduce
//! across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Recorded in experiment outputs.
pub const RNG_NAME: &str = "ChaCha20Rng/seed_from_u64";

pub type Rng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the same seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic child seed for sub-tasks of an experiment.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, stream).next_u64()
}
