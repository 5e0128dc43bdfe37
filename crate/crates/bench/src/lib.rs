//! Criterion benchmarks for the kinetic traffic model; see `benches/model.rs`.
