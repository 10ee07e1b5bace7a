//! Streaming microcluster anomaly detection for dynamic graph edge streams.
//!
//! Each arriving edge is scored in constant time and memory from Count-Min
//! Sketch estimates of its current-tick and all-time counts, using a
//! chi-squared test of the hypothesis that the current tick sits at the
//! edge's historical mean level.
//!
//! ```
//! use midas_core::{Edge, EdgeScorer, ScorerConfig};
//!
//! let mut scorer = ScorerConfig::default().build().unwrap();
//! for tick in 1..=5 {
//!     scorer.score(&Edge::new("10.0.0.1", "10.0.0.2", tick)).unwrap();
//! }
//! let burst = (0..50)
//!     .map(|_| scorer.score(&Edge::new("10.0.0.1", "10.0.0.2", 6)).unwrap())
//!     .last()
//!     .unwrap();
//! assert!(burst > 100.0);
//! ```

pub mod detector;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod scorer;
pub mod sketch;

pub use detector::{
    adjusted_statistic, chi2_quantile_1df, decide, AdjustedStatistic, Decision, DetectorConfig,
};
pub use error::{Error, Result};
pub use eval::{MetricsReport, SynthConfig, ThroughputReport};
pub use ingest::{stream_edges, Column, EdgeReader, OrderPolicy, StreamFormat};
pub use scorer::{
    chi2_score, AnyScorer, Combiner, Counts, Edge, EdgeScorer, Midas, MidasR, Observation,
    ScoredEdge, ScorerConfig, Variant,
};
pub use sketch::{params_for, CountMinSketch, Key, SketchParams};
