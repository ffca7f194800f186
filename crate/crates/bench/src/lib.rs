//! Criterion benchmarks for the swarm kernels live under `benches/`.
