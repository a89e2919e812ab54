//! Time-series CSV and JSON output.
//!
//! The CSV header is `n,E,M_1,...,M_k`; every field is an unsigned
//! integer, every line ends in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::harness::{ExponentEstimate, ReplicaSummary};
use crate::model::{GraphState, Observer, TimeSeries, TimeSeriesRow};
use crate::params::ModelParams;
use crate::theory::TheoryResult;

pub fn csv_header(track_k: usize) -> String {
    let mut h = String::from("n,E");
    for k in 1..=track_k {
        write!(h, ",M_{k}").unwrap();
    }
    h
}

pub fn csv_row(row: &TimeSeriesRow) -> String {
    let mut line = format!("{},{}", row.n, row.e);
    for m in &row.top {
        write!(line, ",{m}").unwrap();
    }
    line
}

pub fn series_to_csv(series: &TimeSeries) -> String {
    let mut out = csv_header(series.track_k);
    out.push('\n');
    for row in &series.rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

pub fn parse_series_csv(text: &str) -> Result<TimeSeries, IoError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| IoError::Csv {
        line: 1,
        reason: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "n" || cols[1] != "E" {
        return Err(IoError::Csv {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let track_k = cols.len() - 2;
    if csv_header(track_k) != header {
        return Err(IoError::Csv {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut rows: Vec<TimeSeriesRow> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Result<Vec<u64>, _> = line.split(',').map(str::parse::<u64>).collect();
        let fields = fields.map_err(|e| IoError::Csv {
            line: lineno,
            reason: e.to_string(),
        })?;
        if fields.len() != track_k + 2 {
            return Err(IoError::Csv {
                line: lineno,
                reason: format!("{} fields, expected {}", fields.len(), track_k + 2),
            });
        }
        if rows.last().is_some_and(|r| r.n >= fields[0]) {
            return Err(IoError::Csv {
                line: lineno,
                reason: "n not strictly increasing".into(),
            });
        }
        rows.push(TimeSeriesRow {
            n: fields[0],
            e: fields[1],
            top: fields[2..].to_vec(),
        });
    }
    Ok(TimeSeries { track_k, rows })
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries, IoError> {
    parse_series_csv(&fs::read_to_string(path)?)
}

/// Streams checkpoints to a writer as they are produced.
pub struct CsvObserver<W: Write> {
    out: W,
    track_k: usize,
}

impl<W: Write> CsvObserver<W> {
    pub fn new(out: W, track_k: usize) -> Self {
        CsvObserver { out, track_k }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> Observer for CsvObserver<W> {
    fn on_start(&mut self, _state: &GraphState) -> io::Result<()> {
        writeln!(self.out, "{}", csv_header(self.track_k))
    }

    fn on_checkpoint(&mut self, row: &TimeSeriesRow) -> io::Result<()> {
        writeln!(self.out, "{}", csv_row(row))
    }
}

/// Summary of a single simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: ModelParams,
    pub seed: u64,
    pub theory: TheoryResult,
    pub final_n: u64,
    pub final_e: u64,
    pub final_top: Vec<u64>,
    pub ratios: Vec<f64>,
    pub m1_log_n_over_n: f64,
    pub exponent: Option<ExponentEstimate>,
    pub exponent_window: (u64, u64),
}

impl RunSummary {
    pub fn from_replica(params: &ModelParams, theory: TheoryResult, summary: &ReplicaSummary, series: &TimeSeries, window: (u64, u64)) -> Self {
        RunSummary {
            params: params.clone(),
            seed: params.seed,
            theory,
            final_n: summary.final_n,
            final_e: series.last().map_or(0, |r| r.e),
            final_top: summary.final_top.clone(),
            ratios: summary.ratios.clone(),
            m1_log_n_over_n: summary.m1_log_n_over_n,
            exponent: summary.exponent,
            exponent_window: window,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
