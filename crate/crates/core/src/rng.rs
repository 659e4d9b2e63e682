//! Seeded random streams.
//!
//! A stream is ChaCha8 keyed by the master seed with the task id as the
//! stream selector, so task `k` sees the same numbers no matter which worker
//! runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent stream number `task` under `seed`.
pub fn stream(seed: u64, task: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(task);
    r
}
