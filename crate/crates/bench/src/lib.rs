//! Benchmark-only crate; see `benches/locate.rs`.
