//! Fixtures shared by the criterion benches.

use midas_core::eval::{SynthConfig, SyntheticStream};
use midas_core::Edge;

/// `n` edges shaped like a network trace: many endpoints and a few dozen
/// edges per tick, so tick rollovers happen regularly.
pub fn trace_edges(n: usize, seed: u64) -> Vec<Edge> {
    let config = SynthConfig::stationary(10_000, 50.0, u64::MAX / 2, seed);
    SyntheticStream::new(&config)
        .expect("valid synthetic config")
        .take(n)
        .collect()
}

/// `n` distinct node tokens.
pub fn tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("10.{}.{}.{}", i >> 16, (i >> 8) & 0xff, i & 0xff)).collect()
}
