//! Criterion benchmarks for the sigeo kernels live in `benches/`.
