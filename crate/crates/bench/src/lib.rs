//! Criterion benchmarks for the per-round costs of the logband learners; see `benches/`.
