//! Criterion benchmarks for `gpcal`; run `cargo bench -p gpcal-bench`.
