//! Per-edge microcluster scoring.
//!
//! [`Midas`] keeps two sketches per edge key: one accumulating all edges seen
//! so far and one holding only the current tick, which is cleared whenever the
//! tick advances. [`MidasR`] replaces the clear with multiplicative decay by
//! `alpha` per elapsed tick and adds source-node and destination-node sketch
//! pairs, so each edge yields an edge score and two node scores that are then
//! combined.
//!
//! Every score is the chi-squared goodness-of-fit statistic comparing the
//! current-tick count against the all-time count spread evenly over `t`
//! ticks; see [`chi2_score`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::{CountMinSketch, Key, KeyHash, SketchParams, DEFAULT_SEED};

/// Sketch rows used by the reference configuration.
pub const DEFAULT_ROWS: usize = 2;
/// Buckets per row used by the reference configuration (`nu = 0.001`).
pub const DEFAULT_BUCKETS: usize = 2719;
pub const DEFAULT_ALPHA: f64 = 0.5;

/// One stream event: a directed edge observed at an integer tick.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: Arc<str>,
    pub destination: Arc<str>,
    pub tick: u64,
    /// Ground truth, `true` meaning anomalous.
    pub label: Option<bool>,
}

impl Edge {
    pub fn new(source: impl Into<Arc<str>>, destination: impl Into<Arc<str>>, tick: u64) -> Self {
        Edge {
            source: source.into(),
            destination: destination.into(),
            tick,
            label: None,
        }
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }

    pub fn key(&self) -> Key<'_> {
        Key::edge(&self.source, &self.destination)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredEdge {
    pub edge: Edge,
    pub score: f64,
    /// Filled in by the detector when a decision was requested.
    pub decision: Option<bool>,
}

/// Chi-squared statistic `(a - s/t)^2 * t^2 / (s * (t - 1))`.
///
/// Defined as 0 when `t == 1` (no past ticks to compare against) or when
/// `s_hat == 0`. The estimates may violate `a_hat <= s_hat` under sketch
/// noise; no ordering is required.
pub fn chi2_score(a_hat: f64, s_hat: f64, t: u64) -> Result<f64> {
    if t < 1 {
        return Err(Error::param("tick must be at least 1 for scoring"));
    }
    Ok(chi2_unchecked(a_hat, s_hat, t))
}

#[inline]
pub(crate) fn chi2_unchecked(a_hat: f64, s_hat: f64, t: u64) -> f64 {
    if t <= 1 || s_hat <= 0.0 {
        return 0.0;
    }
    let t = t as f64;
    let dev = a_hat - s_hat / t;
    dev * dev * t * t / (s_hat * (t - 1.0))
}

/// Current-tick and all-time estimates for one key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Counts {
    pub current: f64,
    pub total: f64,
}

/// Everything a scorer learned while processing one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observation {
    /// Tick used in the statistic (the edge's tick, floored at 1).
    pub t: u64,
    /// Edges seen in the current tick, including this one.
    pub tick_edges: u64,
    pub edge: Counts,
    pub source: Option<Counts>,
    pub destination: Option<Counts>,
    pub score: f64,
}

impl Observation {
    /// The per-key count pairs that contributed to the score.
    pub fn components(&self) -> impl Iterator<Item = Counts> {
        std::iter::once(self.edge)
            .chain(self.source)
            .chain(self.destination)
    }
}

pub trait EdgeScorer {
    /// Update state with `edge` and return its counts and score.
    fn observe(&mut self, edge: &Edge) -> Result<Observation>;

    fn score(&mut self, edge: &Edge) -> Result<f64> {
        self.observe(edge).map(|o| o.score)
    }

    fn score_edge(&mut self, edge: Edge) -> Result<ScoredEdge> {
        let score = self.score(&edge)?;
        Ok(ScoredEdge {
            edge,
            score,
            decision: None,
        })
    }

    /// Advance to `new_tick`, which must exceed the current tick.
    fn tick_rollover(&mut self, new_tick: u64) -> Result<()>;

    /// `None` until the first edge or rollover.
    fn current_tick(&self) -> Option<u64>;
}

/// Shared tick bookkeeping.
#[derive(Clone, Debug, Default)]
struct Clock {
    tick: Option<u64>,
    tick_edges: u64,
    stream_edges: u64,
}

impl Clock {
    /// Returns the number of ticks elapsed if `tick` starts a new tick.
    #[inline]
    fn advance(&mut self, tick: u64) -> Result<Option<u64>> {
        match self.tick {
            Some(cur) if tick == cur => Ok(None),
            Some(cur) if tick > cur => Ok(Some(tick - cur)),
            Some(cur) => Err(Error::StreamOrder {
                line: self.stream_edges + 1,
                previous: cur,
                tick,
            }),
            None => {
                self.tick = Some(tick);
                Ok(None)
            }
        }
    }

    fn check_rollover(&self, new_tick: u64) -> Result<Option<u64>> {
        match self.tick {
            Some(cur) if new_tick <= cur => Err(Error::param(format!(
                "rollover target {new_tick} must exceed current tick {cur}"
            ))),
            Some(cur) => Ok(Some(new_tick - cur)),
            None => Ok(None),
        }
    }

    fn start_tick(&mut self, tick: u64) {
        self.tick = Some(tick);
        self.tick_edges = 0;
    }
}

/// Edge scorer that clears current-tick counts at every tick boundary.
#[derive(Clone, Debug)]
pub struct Midas {
    total: CountMinSketch,
    current: CountMinSketch,
    clock: Clock,
}

impl Midas {
    pub fn new(params: SketchParams) -> Self {
        Midas {
            total: CountMinSketch::new(params),
            current: CountMinSketch::new(params),
            clock: Clock::default(),
        }
    }

    pub fn params(&self) -> &SketchParams {
        self.total.params()
    }

    /// Edges in the current tick.
    pub fn tick_edges(&self) -> u64 {
        self.clock.tick_edges
    }

    pub fn stream_edges(&self) -> u64 {
        self.clock.stream_edges
    }

    pub fn total_sketch(&self) -> &CountMinSketch {
        &self.total
    }

    pub fn current_sketch(&self) -> &CountMinSketch {
        &self.current
    }

    fn roll(&mut self, new_tick: u64) {
        self.current.reset();
        self.clock.start_tick(new_tick);
    }
}

impl EdgeScorer for Midas {
    #[inline]
    fn observe(&mut self, edge: &Edge) -> Result<Observation> {
        if self.clock.advance(edge.tick)?.is_some() {
            self.roll(edge.tick);
        }
        let hash = self.total.params().hash_key(&edge.key());
        let total = self.total.add_query(hash, 1.0);
        let current = self.current.add_query(hash, 1.0);
        self.clock.tick_edges += 1;
        self.clock.stream_edges += 1;

        let t = edge.tick.max(1);
        Ok(Observation {
            t,
            tick_edges: self.clock.tick_edges,
            edge: Counts { current, total },
            source: None,
            destination: None,
            score: chi2_unchecked(current, total, t),
        })
    }

    fn tick_rollover(&mut self, new_tick: u64) -> Result<()> {
        self.clock.check_rollover(new_tick)?;
        self.roll(new_tick);
        Ok(())
    }

    fn current_tick(&self) -> Option<u64> {
        self.clock.tick
    }
}

/// How MIDAS-R merges its edge, source and destination scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    #[default]
    Max,
    Sum,
}

impl Combiner {
    #[inline]
    pub fn combine(self, edge: f64, source: f64, destination: f64) -> f64 {
        match self {
            Combiner::Max => edge.max(source).max(destination),
            Combiner::Sum => edge + source + destination,
        }
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Combiner::Max),
            "sum" => Ok(Combiner::Sum),
            other => Err(Error::param(format!("unknown combiner `{other}`"))),
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combiner::Max => "max",
            Combiner::Sum => "sum",
        })
    }
}

/// A current/total sketch pair for one key kind.
#[derive(Clone, Debug)]
struct DecayingPair {
    total: CountMinSketch,
    current: CountMinSketch,
}

impl DecayingPair {
    fn new(params: SketchParams) -> Self {
        DecayingPair {
            total: CountMinSketch::new(params),
            current: CountMinSketch::new(params),
        }
    }

    #[inline]
    fn add(&mut self, hash: KeyHash) -> Counts {
        Counts {
            total: self.total.add_query(hash, 1.0),
            current: self.current.add_query(hash, 1.0),
        }
    }
}

/// Edge scorer with temporal decay and node-level scores.
#[derive(Clone, Debug)]
pub struct MidasR {
    edges: DecayingPair,
    sources: DecayingPair,
    destinations: DecayingPair,
    alpha: f64,
    combiner: Combiner,
    clock: Clock,
}

impl MidasR {
    pub fn new(params: SketchParams, alpha: f64, combiner: Combiner) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("decay alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(MidasR {
            edges: DecayingPair::new(params),
            sources: DecayingPair::new(params),
            destinations: DecayingPair::new(params),
            alpha,
            combiner,
            clock: Clock::default(),
        })
    }

    pub fn params(&self) -> &SketchParams {
        self.edges.total.params()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn tick_edges(&self) -> u64 {
        self.clock.tick_edges
    }

    pub fn stream_edges(&self) -> u64 {
        self.clock.stream_edges
    }

    fn roll(&mut self, new_tick: u64, elapsed: u64) {
        // One factor of alpha per elapsed tick.
        let factor = i32::try_from(elapsed).map_or(0.0, |k| self.alpha.powi(k));
        for pair in [&mut self.edges, &mut self.sources, &mut self.destinations] {
            pair.current
                .scale(factor)
                .expect("alpha^k lies in [0, 1]");
        }
        self.clock.start_tick(new_tick);
    }
}

impl EdgeScorer for MidasR {
    #[inline]
    fn observe(&mut self, edge: &Edge) -> Result<Observation> {
        if let Some(elapsed) = self.clock.advance(edge.tick)? {
            self.roll(edge.tick, elapsed);
        }
        let params = *self.params();
        let edge_counts = self.edges.add(params.hash_key(&edge.key()));
        let src_counts = self
            .sources
            .add(params.hash_key(&Key::node(&edge.source)));
        let dst_counts = self
            .destinations
            .add(params.hash_key(&Key::node(&edge.destination)));
        self.clock.tick_edges += 1;
        self.clock.stream_edges += 1;

        let t = edge.tick.max(1);
        let score = self.combiner.combine(
            chi2_unchecked(edge_counts.current, edge_counts.total, t),
            chi2_unchecked(src_counts.current, src_counts.total, t),
            chi2_unchecked(dst_counts.current, dst_counts.total, t),
        );
        Ok(Observation {
            t,
            tick_edges: self.clock.tick_edges,
            edge: edge_counts,
            source: Some(src_counts),
            destination: Some(dst_counts),
            score,
        })
    }

    fn tick_rollover(&mut self, new_tick: u64) -> Result<()> {
        match self.clock.check_rollover(new_tick)? {
            Some(elapsed) => self.roll(new_tick, elapsed),
            None => self.clock.start_tick(new_tick),
        }
        Ok(())
    }

    fn current_tick(&self) -> Option<u64> {
        self.clock.tick
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "midas")]
    Midas,
    #[serde(rename = "midas-r")]
    MidasR,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midas" => Ok(Variant::Midas),
            "midas-r" | "midasr" | "midas_r" => Ok(Variant::MidasR),
            other => Err(Error::param(format!("unknown variant `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Midas => "midas",
            Variant::MidasR => "midas-r",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub variant: Variant,
    pub params: SketchParams,
    pub alpha: f64,
    pub combiner: Combiner,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            variant: Variant::Midas,
            params: SketchParams::new(DEFAULT_ROWS, DEFAULT_BUCKETS, DEFAULT_SEED)
                .expect("default sketch params are valid"),
            alpha: DEFAULT_ALPHA,
            combiner: Combiner::Max,
        }
    }
}

impl ScorerConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn build(&self) -> Result<AnyScorer> {
        Ok(match self.variant {
            Variant::Midas => AnyScorer::Midas(Midas::new(self.params)),
            Variant::MidasR => {
                AnyScorer::MidasR(MidasR::new(self.params, self.alpha, self.combiner)?)
            }
        })
    }
}

/// Either scorer, chosen at runtime. Kept unboxed: one lives per stream and
/// every edge goes through it.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum AnyScorer {
    Midas(Midas),
    MidasR(MidasR),
}

impl EdgeScorer for AnyScorer {
    #[inline]
    fn observe(&mut self, edge: &Edge) -> Result<Observation> {
        match self {
            AnyScorer::Midas(s) => s.observe(edge),
            AnyScorer::MidasR(s) => s.observe(edge),
        }
    }

    fn tick_rollover(&mut self, new_tick: u64) -> Result<()> {
        match self {
            AnyScorer::Midas(s) => s.tick_rollover(new_tick),
            AnyScorer::MidasR(s) => s.tick_rollover(new_tick),
        }
    }

    fn current_tick(&self) -> Option<u64> {
        match self {
            AnyScorer::Midas(s) => s.current_tick(),
            AnyScorer::MidasR(s) => s.current_tick(),
        }
    }
}
