use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::scorer::{Edge, EdgeScorer, ScorerConfig, Variant};

/// Per-edge processing time, in disjoint buckets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LatencyHistogram {
    pub le_1us: u64,
    /// Over 1µs and at most 2µs.
    pub le_2us: u64,
    pub gt_2us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub variant: Variant,
    pub edges: u64,
    pub wall_clock_seconds: f64,
    pub edges_per_second: f64,
    pub latency: LatencyHistogram,
}

/// Wall-clock time to score `edges` with a freshly built scorer. Scorer
/// construction is excluded.
pub fn time_scoring(config: &ScorerConfig, edges: &[Edge]) -> Result<Duration> {
    let mut scorer = config.build()?;
    let start = Instant::now();
    let mut acc = 0.0;
    for e in edges {
        acc += scorer.score(e)?;
    }
    let elapsed = start.elapsed();
    black_box(acc);
    Ok(elapsed)
}

/// Throughput over preloaded edges, plus a latency histogram from a second,
/// separately timed pass (per-edge clock reads would distort the first).
pub fn benchmark(config: &ScorerConfig, edges: &[Edge]) -> Result<ThroughputReport> {
    if edges.is_empty() {
        return Ok(ThroughputReport {
            variant: config.variant,
            edges: 0,
            wall_clock_seconds: 0.0,
            edges_per_second: 0.0,
            latency: LatencyHistogram::default(),
        });
    }
    let elapsed = time_scoring(config, edges)?.as_secs_f64();

    let mut latency = LatencyHistogram::default();
    let mut scorer = config.build()?;
    for e in edges {
        let start = Instant::now();
        black_box(scorer.score(e)?);
        let ns = start.elapsed().as_nanos();
        match ns {
            0..=1_000 => latency.le_1us += 1,
            1_001..=2_000 => latency.le_2us += 1,
            _ => latency.gt_2us += 1,
        }
    }

    Ok(ThroughputReport {
        variant: config.variant,
        edges: edges.len() as u64,
        wall_clock_seconds: elapsed,
        edges_per_second: if elapsed > 0.0 {
            edges.len() as f64 / elapsed
        } else {
            f64::INFINITY
        },
        latency,
    })
}
