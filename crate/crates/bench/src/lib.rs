//! Criterion benchmarks for the coeffid solvers; see `benches/solvers.rs`.
