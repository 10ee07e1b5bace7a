use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use midas_core::eval::{BurstSpec, SynthConfig};
use midas_core::ingest::Column;
use midas_core::scorer::{DEFAULT_ALPHA, DEFAULT_BUCKETS, DEFAULT_ROWS};
use midas_core::sketch::{buckets_for, rows_for, DEFAULT_SEED};
use midas_core::{
    Combiner, DetectorConfig, OrderPolicy, ScorerConfig, SketchParams, StreamFormat, Variant,
};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "midas",
    version,
    about = "Streaming microcluster anomaly detection on graph edge streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every edge: u,v,t,score.
    Score,
    /// Score and decide at false-positive level --epsilon:
    /// u,v,t,score,adjusted,decision.
    Detect,
    /// Compute AUC and average precision of scores against labels.
    Eval(EvalArgs),
    /// Write a labeled synthetic stream with injected microclusters.
    Synth(SynthArgs),
    /// Measure scoring throughput on preloaded edges.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scoring algorithm.
    #[arg(long, global = true, default_value = "midas", value_parser = parse_variant)]
    pub variant: Variant,

    /// Sketch rows (hash functions). Defaults to 2, or ceil(ln(2/epsilon))
    /// for `detect`.
    #[arg(long, global = true)]
    pub rows: Option<usize>,

    /// Sketch buckets per row. Defaults to 2719, or ceil(e/nu) when --nu is
    /// given.
    #[arg(long, global = true)]
    pub buckets: Option<usize>,

    /// Sketch approximation error used to size the buckets.
    #[arg(long, global = true)]
    pub nu: Option<f64>,

    /// Target false-positive probability for `detect`.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    /// Per-tick decay of current counts (midas-r).
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,

    /// How midas-r merges edge and node scores.
    #[arg(long, global = true, default_value = "max", value_parser = parse_combiner)]
    pub combiner: Combiner,

    /// Treat each input line as two directed edges.
    #[arg(long, global = true)]
    pub undirected: bool,

    #[arg(long, global = true, default_value_t = ',')]
    pub delimiter: char,

    /// Column roles in input order: src, dst, tick, label, or _ to ignore.
    /// A trailing label column may be absent from the data.
    #[arg(long, global = true, default_value = "src,dst,tick,label")]
    pub columns: String,

    /// Divide raw tick values by this width.
    #[arg(long, global = true, default_value_t = 1)]
    pub tick_width: u64,

    /// What to do with lines whose tick decreases.
    #[arg(long, global = true, default_value = "error", value_parser = parse_order)]
    pub on_disorder: OrderPolicy,

    /// Seed for sketch hashing and synthetic generation.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Input edge file; standard input when absent or `-`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Output file; standard output when absent or `-`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score file: one number per line, or delimited records whose last
    /// field is the score. When absent, --input is scored in-process.
    #[arg(long)]
    pub scores: Option<PathBuf>,

    /// Label file with one 0/1 per line. When absent, labels come from the
    /// label column of --input.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub nodes: usize,

    /// Poisson mean of normal edges per tick.
    #[arg(long, default_value_t = 10_000.0)]
    pub baseline_rate: f64,

    #[arg(long, default_value_t = 50)]
    pub ticks: u64,

    /// Burst as START:DURATION:SOURCES:DESTINATIONS:EDGES_PER_TICK.
    /// Repeatable; replaces the default burst (30:10:3:3:100000).
    #[arg(long = "burst", value_parser = parse_burst)]
    pub bursts: Vec<BurstSpec>,

    /// Generate a stationary stream with no bursts.
    #[arg(long, conflicts_with = "bursts")]
    pub no_bursts: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Synthetic edges to generate when no --input is given.
    #[arg(long, default_value_t = 1 << 22)]
    pub edges: usize,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: midas_core::Error| e.to_string())
}

fn parse_combiner(s: &str) -> Result<Combiner, String> {
    s.parse().map_err(|e: midas_core::Error| e.to_string())
}

fn parse_order(s: &str) -> Result<OrderPolicy, String> {
    s.parse().map_err(|e: midas_core::Error| e.to_string())
}

fn parse_burst(s: &str) -> Result<BurstSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 5 {
        return Err("expected START:DURATION:SOURCES:DESTINATIONS:EDGES_PER_TICK".into());
    }
    let num = |i: usize| parts[i].trim().parse::<u64>().map_err(|e| format!("`{}`: {e}", parts[i]));
    Ok(BurstSpec {
        start_tick: num(0)?,
        duration: num(1)?,
        sources: num(2)? as usize,
        destinations: num(3)? as usize,
        edges_per_tick: num(4)?,
    })
}

impl RunArgs {
    pub fn stream_format(&self) -> Result<StreamFormat, CliError> {
        let columns: Vec<Column> = StreamFormat::parse_columns(&self.columns)?;
        let format = StreamFormat {
            delimiter: self.delimiter,
            columns,
            undirected: self.undirected,
            tick_width: self.tick_width,
            order: self.on_disorder,
        };
        format.validate()?;
        Ok(format)
    }

    /// Sketch sizing. Explicit --rows/--buckets win; otherwise rows follow
    /// epsilon when `size_rows_for_epsilon` is set and buckets follow --nu.
    pub fn sketch_params(&self, size_rows_for_epsilon: bool) -> Result<SketchParams, CliError> {
        let rows = match (self.rows, self.epsilon) {
            (Some(r), _) => r,
            (None, Some(eps)) if size_rows_for_epsilon => rows_for(eps)?,
            _ => DEFAULT_ROWS,
        };
        let buckets = match (self.buckets, self.nu) {
            (Some(b), _) => b,
            (None, Some(nu)) => buckets_for(nu)?,
            _ => DEFAULT_BUCKETS,
        };
        Ok(SketchParams::new(rows, buckets, self.seed)?)
    }

    pub fn scorer_config(&self, size_rows_for_epsilon: bool) -> Result<ScorerConfig, CliError> {
        let config = ScorerConfig {
            variant: self.variant,
            params: self.sketch_params(size_rows_for_epsilon)?,
            alpha: self.alpha,
            combiner: self.combiner,
        };
        // Validates alpha before any input is read.
        config.build()?;
        Ok(config)
    }

    pub fn detector(&self, params: &SketchParams) -> Result<DetectorConfig, CliError> {
        let epsilon = self
            .epsilon
            .ok_or_else(|| CliError::Usage("detect requires --epsilon".into()))?;
        Ok(DetectorConfig::for_sketch(epsilon, params)?)
    }

    pub fn output_format(&self, default: OutputFormat) -> OutputFormat {
        self.format.unwrap_or(default)
    }
}

impl SynthArgs {
    pub fn config(&self, seed: u64) -> SynthConfig {
        let bursts = if self.no_bursts {
            Vec::new()
        } else if self.bursts.is_empty() {
            SynthConfig::default().bursts
        } else {
            self.bursts.clone()
        };
        SynthConfig {
            nodes: self.nodes,
            baseline_rate: self.baseline_rate,
            ticks: self.ticks,
            bursts,
            seed,
        }
    }
}
