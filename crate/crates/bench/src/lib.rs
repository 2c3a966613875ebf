//! Criterion benchmarks of the spectral kernels and solvers, under `benches/`.
