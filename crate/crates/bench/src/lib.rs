//! Criterion benchmarks for the bounds and estimator hot paths; see `benches/`.
