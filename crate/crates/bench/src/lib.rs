//! Benchmarks for the codemia pipeline live under `benches/`.
