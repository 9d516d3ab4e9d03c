//! Criterion benchmarks for the geometry, rendering and regressor hot paths.
//! Run with `cargo bench -p sarheight-bench`.
