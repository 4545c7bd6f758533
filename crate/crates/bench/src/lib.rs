//! Benchmarks of the channel, metric, assembly and solve stages live under
//! `benches/`.
