//! Deterministic random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator. ChaCha is
//! counter based: a `(seed, stream)` pair selects an independent keystream,
//! so trial `t` of a study always sees the same draws no matter which thread
//! runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Substream for trial `trial` under the master `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
