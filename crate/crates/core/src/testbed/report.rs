use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Mode, Pattern};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionMetrics {
    pub pattern: Pattern,
    pub mode: Mode,
    pub repetition: usize,
    pub makespan_ms: f64,
    pub bytes_total: u64,
    pub bytes_through_root: u64,
    /// Data bytes per link, keyed `src->dst`.
    pub links: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub pattern: Pattern,
    pub mean_centralized_ms: Option<f64>,
    pub std_centralized_ms: Option<f64>,
    pub mean_decentralized_ms: Option<f64>,
    pub std_decentralized_ms: Option<f64>,
    /// Mean centralized makespan over mean decentralized makespan.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<RepetitionMetrics>,
    pub aggregates: Vec<AggregateRow>,
    pub valid: bool,
    pub error: Option<String>,
}

impl Default for MetricsReport {
    fn default() -> Self {
        MetricsReport {
            rows: Vec::new(),
            aggregates: Vec::new(),
            valid: true,
            error: None,
        }
    }
}

/// One line of an emitted report. Repetition rows leave the aggregate
/// columns empty and the other way round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub pattern: String,
    pub mode: String,
    pub repetition: Option<usize>,
    pub makespan_ms: Option<f64>,
    pub bytes_total: Option<u64>,
    pub bytes_through_root: Option<u64>,
    pub mean_centralized_ms: Option<f64>,
    pub std_centralized_ms: Option<f64>,
    pub mean_decentralized_ms: Option<f64>,
    pub std_decentralized_ms: Option<f64>,
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format `{s}`")),
        }
    }
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return Some((xs[0], 0.0));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl MetricsReport {
    pub fn makespans(&self, pattern: Pattern, mode: Mode) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.pattern == pattern && r.mode == mode)
            .map(|r| r.makespan_ms)
            .collect()
    }

    /// Add the aggregate row for `pattern` from its repetition rows.
    pub fn aggregate(&mut self, pattern: Pattern) {
        let c = mean_std(&self.makespans(pattern, Mode::Centralized));
        let d = mean_std(&self.makespans(pattern, Mode::Decentralized));
        if c.is_none() && d.is_none() {
            return;
        }
        let speedup = match (c, d) {
            (Some((mc, _)), Some((md, _))) => Some(mc / md),
            _ => None,
        };
        self.aggregates.retain(|a| a.pattern != pattern);
        self.aggregates.push(AggregateRow {
            pattern,
            mean_centralized_ms: c.map(|x| x.0),
            std_centralized_ms: c.map(|x| x.1),
            mean_decentralized_ms: d.map(|x| x.0),
            std_decentralized_ms: d.map(|x| x.1),
            speedup,
        });
    }

    pub fn speedup(&self, pattern: Pattern) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.pattern == pattern)
            .and_then(|a| a.speedup)
    }

    /// Append another report's rows and aggregates.
    pub fn merge(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
        self.aggregates.extend(other.aggregates);
        self.valid &= other.valid;
        if self.error.is_none() {
            self.error = other.error;
        }
    }

    pub fn table(&self) -> Vec<ReportRow> {
        let mut out: Vec<ReportRow> = self
            .rows
            .iter()
            .map(|r| ReportRow {
                pattern: r.pattern.to_string(),
                mode: r.mode.to_string(),
                repetition: Some(r.repetition),
                makespan_ms: Some(r.makespan_ms),
                bytes_total: Some(r.bytes_total),
                bytes_through_root: Some(r.bytes_through_root),
                mean_centralized_ms: None,
                std_centralized_ms: None,
                mean_decentralized_ms: None,
                std_decentralized_ms: None,
                speedup: None,
            })
            .collect();
        out.extend(self.aggregates.iter().map(|a| ReportRow {
            pattern: a.pattern.to_string(),
            mode: "aggregate".into(),
            repetition: None,
            makespan_ms: None,
            bytes_total: None,
            bytes_through_root: None,
            mean_centralized_ms: a.mean_centralized_ms,
            std_centralized_ms: a.std_centralized_ms,
            mean_decentralized_ms: a.mean_decentralized_ms,
            std_decentralized_ms: a.std_decentralized_ms,
            speedup: a.speedup,
        }));
        out
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        let rows = self.table();
        match format {
            ReportFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
            ReportFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                if rows.is_empty() {
                    w.write_record(CSV_HEADER).expect("in-memory write");
                }
                for r in &rows {
                    w.serialize(r).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf-8")
            }
        }
    }

    /// Parse an emitted report back into rows.
    pub fn parse_rows(text: &str, format: ReportFormat) -> Result<Vec<ReportRow>, String> {
        match format {
            ReportFormat::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
            ReportFormat::Csv => csv::Reader::from_reader(text.as_bytes())
                .deserialize()
                .collect::<Result<Vec<ReportRow>, _>>()
                .map_err(|e| e.to_string()),
        }
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "pattern",
    "mode",
    "repetition",
    "makespan_ms",
    "bytes_total",
    "bytes_through_root",
    "mean_centralized_ms",
    "std_centralized_ms",
    "mean_decentralized_ms",
    "std_decentralized_ms",
    "speedup",
];
