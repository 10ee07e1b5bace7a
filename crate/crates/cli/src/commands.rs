use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use midas_core::eval::{self, SynthConfig, SyntheticStream, ThroughputReport};
use midas_core::ingest::{format_edge, open_input};
use midas_core::{stream_edges, Edge, EdgeScorer, Error};
use serde::Serialize;

use crate::config::{BenchArgs, Cli, Command, EvalArgs, OutputFormat, RunArgs, SynthArgs};
use crate::error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Score => score(&cli.run, false),
        Command::Detect => score(&cli.run, true),
        Command::Eval(args) => evaluate(&cli.run, args),
        Command::Synth(args) => synth(&cli.run, args),
        Command::Bench(args) => bench(&cli.run, args),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => {
            let file = File::create(p)
                .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(file))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn is_stdin(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

#[derive(Serialize)]
struct ScoreRecord<'a> {
    u: &'a str,
    v: &'a str,
    t: u64,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    adjusted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decision: Option<u8>,
}

fn score(run: &RunArgs, detect: bool) -> Result<(), CliError> {
    let config = run.scorer_config(detect)?;
    let detector = if detect {
        Some(run.detector(&config.params)?)
    } else {
        None
    };
    let json = match run.output_format(OutputFormat::Csv) {
        OutputFormat::Json => true,
        OutputFormat::Csv | OutputFormat::Text => false,
    };
    let mut scorer = config.build()?;
    let edges = stream_edges(open_input(run.input.as_deref())?, run.stream_format()?)?;
    let mut out = open_output(run.output.as_deref())?;
    let d = run.delimiter;

    for edge in edges {
        let edge = edge?;
        let obs = scorer.observe(&edge)?;
        let decision = detector.as_ref().map(|det| det.evaluate(&obs));
        if json {
            let record = ScoreRecord {
                u: &edge.source,
                v: &edge.destination,
                t: edge.tick,
                score: obs.score,
                adjusted: decision.map(|x| x.adjusted),
                decision: decision.map(|x| x.anomalous as u8),
            };
            serde_json::to_writer(&mut out, &record)?;
            writeln!(out)?;
        } else {
            write!(out, "{}{d}{}{d}{}{d}{}", edge.source, edge.destination, edge.tick, obs.score)?;
            if let Some(x) = decision {
                write!(out, "{d}{}{d}{}", x.adjusted, x.anomalous as u8)?;
            }
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Scores from `reader`: one number per line, or delimited records whose
/// last field is the score. Blank and `#` lines are skipped.
pub fn read_scores(reader: impl BufRead, delimiter: char) -> Result<Vec<f64>, Error> {
    let mut scores = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(delimiter).next().unwrap_or(line).trim();
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line: i as u64 + 1,
            message: format!("invalid score `{field}`"),
        })?;
        scores.push(value);
    }
    Ok(scores)
}

pub fn read_labels(reader: impl BufRead) -> Result<Vec<bool>, Error> {
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        labels.push(match line {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("label must be 0 or 1, got `{other}`"),
                })
            }
        });
    }
    Ok(labels)
}

fn read_edges(run: &RunArgs) -> Result<Vec<Edge>, CliError> {
    let edges = stream_edges(open_input(run.input.as_deref())?, run.stream_format()?)?;
    Ok(edges.collect::<Result<_, _>>()?)
}

fn labels_from_edges(edges: &[Edge]) -> Result<Vec<bool>, Error> {
    edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.label.ok_or_else(|| {
                Error::Eval(format!("edge {} ({} -> {}) has no label", i + 1, e.source, e.destination))
            })
        })
        .collect()
}

fn evaluate(run: &RunArgs, args: &EvalArgs) -> Result<(), CliError> {
    let format = run.output_format(OutputFormat::Json);
    if format == OutputFormat::Csv {
        return Err(CliError::Usage("eval writes json or text".into()));
    }
    let labels_from_input = args.labels.is_none();
    if let Some(scores) = &args.scores {
        if is_stdin(Some(scores)) && labels_from_input && is_stdin(run.input.as_deref()) {
            return Err(CliError::Usage(
                "scores and labels cannot both come from standard input".into(),
            ));
        }
    }

    let (scores, labels) = match &args.scores {
        Some(path) => {
            let scores = read_scores(open_input(Some(path))?, run.delimiter)?;
            let labels = match &args.labels {
                Some(l) => read_labels(open_input(Some(l))?)?,
                None => labels_from_edges(&read_edges(run)?)?,
            };
            (scores, labels)
        }
        None => {
            let config = run.scorer_config(false)?;
            let edges = read_edges(run)?;
            let labels = match &args.labels {
                Some(l) => read_labels(open_input(Some(l))?)?,
                None => labels_from_edges(&edges)?,
            };
            (eval::score_all(&config, &edges)?, labels)
        }
    };

    let report = eval::evaluate(&scores, &labels)?;
    let mut out = open_output(run.output.as_deref())?;
    match format {
        OutputFormat::Text => writeln!(out, "{report}")?,
        _ => {
            serde_json::to_writer(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SynthRecord<'a> {
    u: &'a str,
    v: &'a str,
    t: u64,
    label: u8,
}

fn synth(run: &RunArgs, args: &SynthArgs) -> Result<(), CliError> {
    let config = args.config(run.seed);
    let stream = SyntheticStream::new(&config)?;
    let format = run.stream_format()?;
    let json = run.output_format(OutputFormat::Csv) == OutputFormat::Json;
    let mut out = open_output(run.output.as_deref())?;
    for edge in stream {
        if json {
            let record = SynthRecord {
                u: &edge.source,
                v: &edge.destination,
                t: edge.tick,
                label: edge.label.unwrap_or(false) as u8,
            };
            serde_json::to_writer(&mut out, &record)?;
            writeln!(out)?;
        } else {
            writeln!(out, "{}", format_edge(&edge, &format))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn bench(run: &RunArgs, args: &BenchArgs) -> Result<(), CliError> {
    let config = run.scorer_config(false)?;
    let edges = if run.input.is_some() {
        read_edges(run)?
    } else {
        // Network-trace-shaped: many endpoints, a few dozen edges per tick.
        let cfg = SynthConfig::stationary(10_000, 50.0, u64::MAX / 2, run.seed);
        SyntheticStream::new(&cfg)?.take(args.edges).collect()
    };
    let report = eval::benchmark(&config, &edges)?;
    let mut out = open_output(run.output.as_deref())?;
    match run.output_format(OutputFormat::Json) {
        OutputFormat::Text => write_bench_text(&mut out, &report)?,
        OutputFormat::Json => {
            serde_json::to_writer(&mut out, &report)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => return Err(CliError::Usage("bench writes json or text".into())),
    }
    out.flush()?;
    Ok(())
}

fn write_bench_text(out: &mut dyn Write, r: &ThroughputReport) -> io::Result<()> {
    writeln!(out, "variant:        {}", r.variant)?;
    writeln!(out, "edges:          {}", r.edges)?;
    writeln!(out, "wall clock (s): {:.6}", r.wall_clock_seconds)?;
    writeln!(out, "edges/second:   {:.0}", r.edges_per_second)?;
    writeln!(out, "latency <=1us:  {}", r.latency.le_1us)?;
    writeln!(out, "latency <=2us:  {}", r.latency.le_2us)?;
    writeln!(out, "latency >2us:   {}", r.latency.gt_2us)
}
