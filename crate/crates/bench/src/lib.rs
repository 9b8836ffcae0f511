//! Criterion benchmarks for chlab-core kernels live under `benches/`.
