//! Criterion benchmarks for polyvol live in `benches/`.
