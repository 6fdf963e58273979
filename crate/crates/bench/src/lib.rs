//! Criterion benchmarks for the orgym workspace live under `benches/`.
