//! Ground-truth evaluation, synthetic microcluster streams and throughput
//! measurement.

mod bench;
mod metrics;
mod synth;

pub use bench::{benchmark, time_scoring, LatencyHistogram, ThroughputReport};
pub use metrics::{average_precision, evaluate, roc_auc, MetricsReport};
pub use synth::{generate_synthetic, BurstSpec, SynthConfig, SyntheticStream};

use crate::error::Result;
use crate::scorer::{Edge, EdgeScorer, ScorerConfig};

/// Score a preloaded stream with a fresh scorer.
pub fn score_all(config: &ScorerConfig, edges: &[Edge]) -> Result<Vec<f64>> {
    let mut scorer = config.build()?;
    edges.iter().map(|e| scorer.score(e)).collect()
}

/// Ground-truth labels of a stream; unlabeled edges count as normal.
pub fn labels_of(edges: &[Edge]) -> Vec<bool> {
    edges.iter().map(|e| e.label.unwrap_or(false)).collect()
}
