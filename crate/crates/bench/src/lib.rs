//! Criterion benchmarks for `qkd-sift` live under `benches/`.
