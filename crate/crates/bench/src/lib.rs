//! Benchmarks for the imputation engines live in `benches/`.
