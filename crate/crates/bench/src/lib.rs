//! Criterion benchmarks for the `ioncavity` crate live under `benches/`.
