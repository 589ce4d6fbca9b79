//! Benchmarks for the core crate live under `benches/`.

pub use margulis_core;
