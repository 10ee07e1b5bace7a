//! Delimited-text edge streams.
//!
//! One edge per line. Column roles are configurable; the default layout is
//! `source,destination,tick[,label]` where a trailing label column may be
//! omitted. Lines are read one at a time and never buffered as a whole.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scorer::Edge;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Source,
    Destination,
    Tick,
    Label,
    /// Present in the data but ignored.
    Skip,
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "src" | "source" | "u" => Column::Source,
            "dst" | "destination" | "dest" | "v" => Column::Destination,
            "tick" | "time" | "t" | "timestamp" => Column::Tick,
            "label" | "attack" => Column::Label,
            "_" | "skip" | "-" => Column::Skip,
            other => return Err(Error::param(format!("unknown column `{other}`"))),
        })
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Column::Source => "src",
            Column::Destination => "dst",
            Column::Tick => "tick",
            Column::Label => "label",
            Column::Skip => "_",
        })
    }
}

/// What to do when a tick is smaller than its predecessor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrderPolicy {
    #[default]
    Error,
    /// Drop the offending line and keep going.
    Skip,
}

impl FromStr for OrderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "error" => Ok(OrderPolicy::Error),
            "skip" => Ok(OrderPolicy::Skip),
            other => Err(Error::param(format!("unknown order policy `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamFormat {
    pub delimiter: char,
    pub columns: Vec<Column>,
    /// Expand every line into two directed edges.
    pub undirected: bool,
    /// Raw tick values are divided by this width (1 keeps them verbatim).
    pub tick_width: u64,
    pub order: OrderPolicy,
}

impl Default for StreamFormat {
    fn default() -> Self {
        StreamFormat {
            delimiter: ',',
            columns: vec![Column::Source, Column::Destination, Column::Tick, Column::Label],
            undirected: false,
            tick_width: 1,
            order: OrderPolicy::Error,
        }
    }
}

impl StreamFormat {
    pub fn new(delimiter: char, columns: Vec<Column>) -> Result<Self> {
        let fmt = StreamFormat {
            delimiter,
            columns,
            ..StreamFormat::default()
        };
        fmt.validate()?;
        Ok(fmt)
    }

    /// Parse a comma-separated column list such as `src,dst,tick,label`.
    pub fn parse_columns(spec: &str) -> Result<Vec<Column>> {
        spec.split(',').map(str::parse).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for required in [Column::Source, Column::Destination, Column::Tick] {
            let n = self.columns.iter().filter(|&&c| c == required).count();
            if n != 1 {
                return Err(Error::param(format!(
                    "column layout needs exactly one `{required}` column, found {n}"
                )));
            }
        }
        if self.columns.iter().filter(|&&c| c == Column::Label).count() > 1 {
            return Err(Error::param("column layout has more than one label column"));
        }
        if self.tick_width == 0 {
            return Err(Error::param("tick width must be at least 1"));
        }
        if self.delimiter == '\0' || self.delimiter == '\n' || self.delimiter == '\r' {
            return Err(Error::param("delimiter cannot be NUL or a line break"));
        }
        Ok(())
    }

    fn optional_trailing_label(&self) -> bool {
        self.columns.last() == Some(&Column::Label)
    }
}

/// Parse one line (without its terminator) into an edge.
pub fn parse_line(line: &str, line_no: u64, format: &StreamFormat) -> Result<Edge> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split(format.delimiter).collect();
    let expected = format.columns.len();
    let label_omitted = fields.len() + 1 == expected && format.optional_trailing_label();
    if fields.len() != expected && !label_omitted {
        return Err(err(format!(
            "expected {expected} columns, found {}",
            fields.len()
        )));
    }

    let mut source = None;
    let mut destination = None;
    let mut tick = None;
    let mut label = None;
    for (column, raw) in format.columns.iter().zip(&fields) {
        let field = raw.trim();
        match column {
            Column::Source => source = Some(token(field, "source").map_err(err)?),
            Column::Destination => destination = Some(token(field, "destination").map_err(err)?),
            Column::Tick => tick = Some(parse_tick(field).map_err(err)? / format.tick_width),
            Column::Label => {
                label = Some(match field {
                    "0" => false,
                    "1" => true,
                    other => return Err(err(format!("label must be 0 or 1, got `{other}`"))),
                })
            }
            Column::Skip => {}
        }
    }
    let (Some(source), Some(destination), Some(tick)) = (source, destination, tick) else {
        return Err(err("incomplete column layout".into()));
    };
    Ok(Edge {
        source,
        destination,
        tick,
        label,
    })
}

fn token(field: &str, what: &str) -> std::result::Result<Arc<str>, String> {
    if field.is_empty() {
        return Err(format!("empty {what} token"));
    }
    if field.contains('\0') {
        return Err(format!("{what} token contains a NUL byte"));
    }
    Ok(Arc::from(field))
}

fn parse_tick(field: &str) -> std::result::Result<u64, String> {
    if field.starts_with('-') && field.len() > 1 {
        return Err(format!("negative tick `{field}`"));
    }
    field
        .parse::<u64>()
        .map_err(|e| format!("invalid tick `{field}`: {e}"))
}

/// Render an edge in `format`'s column order. Skipped columns are empty and
/// an absent label leaves its column empty unless it is the trailing one.
pub fn format_edge(edge: &Edge, format: &StreamFormat) -> String {
    let mut cols = format.columns.as_slice();
    if edge.label.is_none() && format.optional_trailing_label() {
        cols = &cols[..cols.len() - 1];
    }
    let mut out = String::new();
    for (i, column) in cols.iter().enumerate() {
        if i > 0 {
            out.push(format.delimiter);
        }
        match column {
            Column::Source => out.push_str(&edge.source),
            Column::Destination => out.push_str(&edge.destination),
            Column::Tick => out.push_str(&edge.tick.to_string()),
            Column::Label => match edge.label {
                Some(true) => out.push('1'),
                Some(false) => out.push('0'),
                None => {}
            },
            Column::Skip => {}
        }
    }
    out
}

/// Streaming edge iterator over any buffered reader.
pub struct EdgeReader<R> {
    reader: R,
    format: StreamFormat,
    buf: String,
    line_no: u64,
    last_tick: Option<u64>,
    pending: Option<Edge>,
    skipped: u64,
}

impl<R: BufRead> EdgeReader<R> {
    pub fn new(reader: R, format: StreamFormat) -> Result<Self> {
        format.validate()?;
        Ok(EdgeReader {
            reader,
            format,
            buf: String::new(),
            line_no: 0,
            last_tick: None,
            pending: None,
            skipped: 0,
        })
    }

    /// Lines dropped under [`OrderPolicy::Skip`].
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn line_no(&self) -> u64 {
        self.line_no
    }

    fn next_line(&mut self) -> Option<Result<Edge>> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                    self.line_no += 1;
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        message: "line is not valid UTF-8".into(),
                    }));
                }
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let edge = match parse_line(line, self.line_no, &self.format) {
                Ok(e) => e,
                Err(e) => return Some(Err(e)),
            };
            if let Some(prev) = self.last_tick {
                if edge.tick < prev {
                    match self.format.order {
                        OrderPolicy::Error => {
                            return Some(Err(Error::StreamOrder {
                                line: self.line_no,
                                previous: prev,
                                tick: edge.tick,
                            }))
                        }
                        OrderPolicy::Skip => {
                            self.skipped += 1;
                            continue;
                        }
                    }
                }
            }
            self.last_tick = Some(edge.tick);
            return Some(Ok(edge));
        }
    }
}

impl<R: BufRead> Iterator for EdgeReader<R> {
    type Item = Result<Edge>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(edge) = self.pending.take() {
            return Some(Ok(edge));
        }
        let item = self.next_line()?;
        if let Ok(edge) = &item {
            if self.format.undirected {
                self.pending = Some(Edge {
                    source: edge.destination.clone(),
                    destination: edge.source.clone(),
                    tick: edge.tick,
                    label: edge.label,
                });
            }
        }
        Some(item)
    }
}

pub fn stream_edges<R: BufRead>(reader: R, format: StreamFormat) -> Result<EdgeReader<R>> {
    EdgeReader::new(reader, format)
}

/// Open a file, or standard input for `None` / `-`.
pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match path {
        None => Ok(Box::new(io::stdin().lock())),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(io::stdin().lock())),
        Some(p) => {
            let file = File::open(p)
                .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufReader::new(file)))
        }
    }
}
