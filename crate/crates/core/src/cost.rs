//! Abstract operation counter.
//!
//! Wall-clock timings are noisy, so every numerical kernel also charges an
//! abstract cost to a thread-local counter: `d²` units for a matrix-vector
//! product, a triangular solve or a rank-one update, `d²` per projected
//! gradient iteration, `n·d` for a pass over `n` logged samples and `d³` for
//! a dense factorization. Episodes run on a single thread, so the runner can
//! bracket a learner's round with [`reset`] and [`take`].

use std::cell::Cell;

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub fn charge(units: usize) {
    OPS.with(|c| c.set(c.get().saturating_add(units as u64)));
}

pub fn reset() {
    OPS.with(|c| c.set(0));
}

/// Returns the units charged since the last reset and clears the counter.
pub fn take() -> u64 {
    OPS.with(|c| c.replace(0))
}

pub fn peek() -> u64 {
    OPS.with(|c| c.get())
}
