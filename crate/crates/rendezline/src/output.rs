//! Result serialization: the fixed-width CSV emitted by sweeps (and read
//! back by the comparison tooling) and the JSON documents for single
//! traced trials and whole sweeps.
//!
//! Floats are printed with nine significant digits in scientific notation.
//! That is enough to compare runs at far below statistical resolution, and
//! printing is a fixpoint: parsing a formatted value and formatting it
//! again reproduces the same bytes, so repeated round-trips are stable.

use serde::Serialize;
use thiserror::Error;

use crate::engine::SimEvent;
use crate::harness::{AggregateStats, HarnessMode, SweepSpec};
use crate::model::{EpsilonMode, GaussianNoise, SimConfig, TrialResult};

pub const CSV_HEADER: &str = "mode,n,d,r,trials,mean_distance,distance_ratio,mean_rounds,\
                              mean_time,first_to_total_gap,stage3_onset_delta,failures,stderr_ratio";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OutputError {
    #[error("line 1: expected the column header, got {0:?}")]
    BadHeader(String),
    #[error("line {line}: expected {want} comma-separated fields, got {got}")]
    FieldCount { line: usize, want: usize, got: usize },
    #[error("line {line}, column {column}: cannot parse {value:?}")]
    BadField { line: usize, column: &'static str, value: String },
}

/// One sweep-result row, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputRow {
    pub mode: HarnessMode,
    pub n: u32,
    pub d: f64,
    pub r: f64,
    pub trials: u32,
    pub mean_distance: f64,
    pub distance_ratio: f64,
    pub mean_rounds: f64,
    pub mean_time: f64,
    pub first_to_total_gap: f64,
    pub stage3_onset_delta: f64,
    pub failures: u32,
    pub stderr_ratio: f64,
}

const COLUMNS: usize = 13;

fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

impl From<&AggregateStats> for OutputRow {
    fn from(stats: &AggregateStats) -> Self {
        OutputRow {
            mode: stats.key.mode,
            n: stats.key.n,
            d: stats.key.d,
            r: stats.key.r,
            trials: stats.trials,
            mean_distance: stats.mean_distance,
            distance_ratio: stats.distance_ratio,
            mean_rounds: stats.mean_rounds,
            mean_time: stats.mean_time,
            first_to_total_gap: stats.first_to_total_gap,
            stage3_onset_delta: stats.stage3_onset_delta,
            failures: stats.failures,
            stderr_ratio: stats.stderr_ratio,
        }
    }
}

impl OutputRow {
    fn to_line(self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode.label(),
            self.n,
            fmt(self.d),
            fmt(self.r),
            self.trials,
            fmt(self.mean_distance),
            fmt(self.distance_ratio),
            fmt(self.mean_rounds),
            fmt(self.mean_time),
            fmt(self.first_to_total_gap),
            fmt(self.stage3_onset_delta),
            self.failures,
            fmt(self.stderr_ratio),
        )
    }
}

/// Renders rows as CSV: header line, one line per row, LF separators, a
/// trailing newline.
pub fn rows_to_csv(rows: &[OutputRow]) -> String {
    let mut out = String::with_capacity((rows.len() + 1) * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<OutputRow>, OutputError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        other => {
            return Err(OutputError::BadHeader(other.map(|(_, h)| h).unwrap_or("").to_string()))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue; // tolerate a trailing blank line
        }
        let ln = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS {
            return Err(OutputError::FieldCount { line: ln, want: COLUMNS, got: fields.len() });
        }
        let bad = |column: &'static str, value: &str| OutputError::BadField {
            line: ln,
            column,
            value: value.to_string(),
        };
        let float = |column: &'static str, value: &str| {
            value.parse::<f64>().map_err(|_| bad(column, value))
        };
        let int = |column: &'static str, value: &str| {
            value.parse::<u32>().map_err(|_| bad(column, value))
        };
        rows.push(OutputRow {
            mode: fields[0].parse().map_err(|_| bad("mode", fields[0]))?,
            n: int("n", fields[1])?,
            d: float("d", fields[2])?,
            r: float("r", fields[3])?,
            trials: int("trials", fields[4])?,
            mean_distance: float("mean_distance", fields[5])?,
            distance_ratio: float("distance_ratio", fields[6])?,
            mean_rounds: float("mean_rounds", fields[7])?,
            mean_time: float("mean_time", fields[8])?,
            first_to_total_gap: float("first_to_total_gap", fields[9])?,
            stage3_onset_delta: float("stage3_onset_delta", fields[10])?,
            failures: int("failures", fields[11])?,
            stderr_ratio: float("stderr_ratio", fields[12])?,
        });
    }
    Ok(rows)
}

/// Grid and sampling parameters a sweep ran with: enough to rerun it
/// bit-for-bit. The worker count is deliberately absent — it never affects
/// the rows, and including it would break byte-identical output across
/// `--jobs` settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub modes: Vec<HarnessMode>,
    pub n_values: Vec<u32>,
    pub d_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub trials_per_cell: u32,
    pub base_seed: u64,
    pub epsilon_mode: EpsilonMode,
    pub noise: GaussianNoise,
}

impl From<&SweepSpec> for SweepConfig {
    fn from(spec: &SweepSpec) -> Self {
        SweepConfig {
            modes: spec.modes.clone(),
            n_values: spec.n_values.clone(),
            d_values: spec.d_values.clone(),
            r_values: spec.r_values.clone(),
            trials_per_cell: spec.trials_per_cell,
            base_seed: spec.base_seed,
            epsilon_mode: spec.epsilon_mode,
            noise: spec.noise,
        }
    }
}

/// JSON document for a whole sweep: its configuration plus every cell's
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDocument {
    pub config: SweepConfig,
    pub rows: Vec<AggregateStats>,
}

/// JSON document for one traced trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialDocument {
    pub config: SimConfig,
    pub result: TrialResult,
    pub timeline: Vec<SimEvent>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("output types serialize");
    out.push('\n');
    out
}
