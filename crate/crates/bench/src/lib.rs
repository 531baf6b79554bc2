//! Criterion benchmarks for the `vvrkbs` crate; see `benches/`.
