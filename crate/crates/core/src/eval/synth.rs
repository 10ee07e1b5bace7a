use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::Edge;
use crate::sketch::DEFAULT_SEED;

/// A microcluster: a dense block of edges between a few sources and a few
/// destinations over a window of ticks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstSpec {
    pub start_tick: u64,
    pub duration: u64,
    pub sources: usize,
    pub destinations: usize,
    pub edges_per_tick: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub nodes: usize,
    /// Poisson mean of normal edges per tick.
    pub baseline_rate: f64,
    /// Ticks run from 1 to `ticks` inclusive.
    pub ticks: u64,
    pub bursts: Vec<BurstSpec>,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 100 nodes, 10^4 edges per tick over 50 ticks, and one 10-tick burst at
    /// ten times the baseline volume into a 3x3 node block.
    fn default() -> Self {
        SynthConfig {
            nodes: 100,
            baseline_rate: 10_000.0,
            ticks: 50,
            bursts: vec![BurstSpec {
                start_tick: 30,
                duration: 10,
                sources: 3,
                destinations: 3,
                edges_per_tick: 100_000,
            }],
            seed: DEFAULT_SEED,
        }
    }
}

impl SynthConfig {
    /// A burst-free stream: every pair keeps the same mean level each tick.
    pub fn stationary(nodes: usize, baseline_rate: f64, ticks: u64, seed: u64) -> Self {
        SynthConfig {
            nodes,
            baseline_rate,
            ticks,
            bursts: Vec::new(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::param("synthetic stream needs at least 2 nodes"));
        }
        if !(self.baseline_rate > 0.0 && self.baseline_rate.is_finite()) {
            return Err(Error::param("baseline rate must be positive"));
        }
        if self.ticks == 0 {
            return Err(Error::param("tick count must be positive"));
        }
        for (i, b) in self.bursts.iter().enumerate() {
            if b.duration == 0 || b.sources == 0 || b.destinations == 0 || b.edges_per_tick == 0 {
                return Err(Error::param(format!("burst {i}: all counts must be positive")));
            }
            if b.start_tick == 0 || b.start_tick + b.duration - 1 > self.ticks {
                return Err(Error::param(format!(
                    "burst {i}: window {}..{} outside ticks 1..={}",
                    b.start_tick,
                    b.start_tick + b.duration - 1,
                    self.ticks
                )));
            }
            if b.sources > self.nodes || b.destinations > self.nodes {
                return Err(Error::param(format!("burst {i}: node set larger than graph")));
            }
        }
        Ok(())
    }
}

struct Burst {
    spec: BurstSpec,
    sources: Vec<usize>,
    destinations: Vec<usize>,
}

/// Lazily generated labeled stream, one tick at a time.
pub struct SyntheticStream {
    rng: ChaCha8Rng,
    names: Vec<Arc<str>>,
    volume: Poisson<f64>,
    bursts: Vec<Burst>,
    ticks: u64,
    next_tick: u64,
    buffer: std::vec::IntoIter<Edge>,
}

impl SyntheticStream {
    pub fn new(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let names = (0..config.nodes).map(|i| Arc::from(format!("n{i}"))).collect();
        let all: Vec<usize> = (0..config.nodes).collect();
        let bursts = config
            .bursts
            .iter()
            .map(|spec| Burst {
                spec: spec.clone(),
                sources: all.choose_multiple(&mut rng, spec.sources).copied().collect(),
                destinations: all
                    .choose_multiple(&mut rng, spec.destinations)
                    .copied()
                    .collect(),
            })
            .collect();
        let volume = Poisson::new(config.baseline_rate)
            .map_err(|e| Error::param(format!("baseline rate: {e}")))?;
        Ok(SyntheticStream {
            rng,
            names,
            volume,
            bursts,
            ticks: config.ticks,
            next_tick: 1,
            buffer: Vec::new().into_iter(),
        })
    }

    fn fill_tick(&mut self, tick: u64) {
        let n = self.names.len();
        let count = self.volume.sample(&mut self.rng) as u64;
        let mut edges = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let u = self.rng.random_range(0..n);
            let mut v = self.rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            edges.push(self.edge(u, v, tick, false));
        }
        for b in 0..self.bursts.len() {
            let spec = &self.bursts[b].spec;
            if tick < spec.start_tick || tick >= spec.start_tick + spec.duration {
                continue;
            }
            for _ in 0..spec.edges_per_tick {
                let burst = &self.bursts[b];
                let u = *burst.sources.choose(&mut self.rng).expect("non-empty");
                let v = *burst.destinations.choose(&mut self.rng).expect("non-empty");
                edges.push(self.edge(u, v, tick, true));
            }
        }
        edges.shuffle(&mut self.rng);
        self.buffer = edges.into_iter();
    }

    fn edge(&self, u: usize, v: usize, tick: u64, label: bool) -> Edge {
        Edge {
            source: self.names[u].clone(),
            destination: self.names[v].clone(),
            tick,
            label: Some(label),
        }
    }
}

impl Iterator for SyntheticStream {
    type Item = Edge;

    fn next(&mut self) -> Option<Edge> {
        loop {
            if let Some(e) = self.buffer.next() {
                return Some(e);
            }
            if self.next_tick > self.ticks {
                return None;
            }
            let tick = self.next_tick;
            self.next_tick += 1;
            self.fill_tick(tick);
        }
    }
}

/// Labeled stream with uniformly random baseline edges (label 0) and the
/// configured bursts (label 1), merged in tick order.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<Edge>> {
    Ok(SyntheticStream::new(config)?.collect())
}
