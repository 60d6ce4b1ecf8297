//! Benchmark-only crate; see `benches/calibration.rs`.
