//! Seedable random streams.
//!
//! Every run owns two streams derived from its base seed: one drives the
//! environment (mask generation) and one drives the algorithm. Both are
//! ChaCha8 generators keyed by `seed_from_u64(base_seed)` and separated by
//! the ChaCha stream id, so two algorithms sharing a base seed observe the
//! same sequence of masks no matter how many numbers each consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type RandomStream = ChaCha8Rng;

/// Stream id of the environment (mask) stream.
pub const ENVIRONMENT_STREAM: u64 = 1;
/// Stream id of the algorithm stream.
pub const ALGORITHM_STREAM: u64 = 2;

/// A stream keyed by `seed` on ChaCha stream `label`.
pub fn stream(seed: u64, label: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

pub fn environment_stream(seed: u64) -> RandomStream {
    stream(seed, ENVIRONMENT_STREAM)
}

pub fn algorithm_stream(seed: u64) -> RandomStream {
    stream(seed, ALGORITHM_STREAM)
}
