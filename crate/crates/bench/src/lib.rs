//! Criterion benchmarks for wdeval-core live in `benches/`.
