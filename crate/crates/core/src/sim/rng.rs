//! Seeded, independently addressable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the experiment seed; the
//! 64-bit stream selector encodes the purpose, the run and (for per-learner
//! randomness) the algorithm. Learners facing the same run therefore see the
//! same arms and the same reward noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    Theta = 1,
    Arms = 2,
    Rewards = 3,
    Perturbation = 4,
}

/// Generator for `(seed, run, stream, slot)`; `slot` separates learners.
pub fn stream(seed: u64, run_id: u64, which: Stream, slot: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((run_id << 16) | (u64::from(slot) << 8) | which as u64);
    rng
}
