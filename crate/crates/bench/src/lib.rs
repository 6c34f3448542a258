//! Criterion benchmarks for `quantile-core`; the benchmarks live in `benches/`.
