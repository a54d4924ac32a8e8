//! Serialization of per-window samples and their quartile summaries.
//!
//! Floats are written with six significant digits, rounding half to even,
//! with trailing zeros removed, so ports in other languages can reproduce
//! the bytes exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricSample;

pub const CSV_HEADER: [&str; 8] = [
    "window_start",
    "static_edge_cut",
    "dynamic_edge_cut",
    "static_balance",
    "dynamic_balance",
    "normalized_dynamic_balance",
    "moves",
    "repartitioned",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot summarize an empty series")]
    EmptySeries,
    #[error("malformed sample file: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One output row: a sample plus its normalized dynamic balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub window_start: u64,
    pub static_edge_cut: f64,
    pub dynamic_edge_cut: f64,
    pub static_balance: f64,
    pub dynamic_balance: f64,
    pub normalized_dynamic_balance: f64,
    pub moves: u64,
    pub repartitioned: bool,
}

impl ReportRow {
    pub fn from_sample(s: &MetricSample, k: usize) -> Self {
        ReportRow {
            window_start: s.window_start,
            static_edge_cut: s.static_edge_cut,
            dynamic_edge_cut: s.dynamic_edge_cut,
            static_balance: s.static_balance,
            dynamic_balance: s.dynamic_balance,
            normalized_dynamic_balance: s.normalized_dynamic_balance(k),
            moves: s.moves,
            repartitioned: s.repartitioned,
        }
    }
}

pub fn rows(samples: &[MetricSample], k: usize) -> Vec<ReportRow> {
    samples.iter().map(|s| ReportRow::from_sample(s, k)).collect()
}

/// Five-number summary of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl SummaryStats {
    /// Quartiles by linear interpolation between closest ranks: the
    /// p-quantile of sorted `x[0..n]` sits at position `h = (n - 1) p`
    /// and is `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋ + 1] - x[⌊h⌋])`.
    pub fn of(values: &[f64]) -> Result<Self, ReportError> {
        if values.is_empty() {
            return Err(ReportError::EmptySeries);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(SummaryStats {
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub windows: usize,
    pub repartitions: usize,
    pub total_moves: u64,
    pub static_edge_cut: SummaryStats,
    pub dynamic_edge_cut: SummaryStats,
    pub static_balance: SummaryStats,
    pub dynamic_balance: SummaryStats,
    pub normalized_dynamic_balance: SummaryStats,
}

impl ReportSummary {
    /// `(name, stats)` pairs in column order.
    pub fn metrics(&self) -> [(&'static str, &SummaryStats); 5] {
        [
            ("static_edge_cut", &self.static_edge_cut),
            ("dynamic_edge_cut", &self.dynamic_edge_cut),
            ("static_balance", &self.static_balance),
            ("dynamic_balance", &self.dynamic_balance),
            ("normalized_dynamic_balance", &self.normalized_dynamic_balance),
        ]
    }
}

pub fn summarize_rows(rows: &[ReportRow]) -> Result<ReportSummary, ReportError> {
    let col = |f: fn(&ReportRow) -> f64| SummaryStats::of(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(ReportSummary {
        windows: rows.len(),
        repartitions: rows.iter().filter(|r| r.repartitioned).count(),
        total_moves: rows.iter().map(|r| r.moves).sum(),
        static_edge_cut: col(|r| r.static_edge_cut)?,
        dynamic_edge_cut: col(|r| r.dynamic_edge_cut)?,
        static_balance: col(|r| r.static_balance)?,
        dynamic_balance: col(|r| r.dynamic_balance)?,
        normalized_dynamic_balance: col(|r| r.normalized_dynamic_balance)?,
    })
}

pub fn summarize(samples: &[MetricSample], k: usize) -> Result<ReportSummary, ReportError> {
    summarize_rows(&rows(samples, k))
}

/// Formats `x` with six significant digits.
///
/// ```
/// use shardsim::report::format_float;
/// assert_eq!(format_float(0.2), "0.2");
/// assert_eq!(format_float(2.0 / 3.0), "0.666667");
/// assert_eq!(format_float(1234567.0), "1234570");
/// assert_eq!(format_float(0.0), "0");
/// ```
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Rust rounds the exact binary value, ties to even.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if !(-7..=20).contains(&exp) {
        let m = trim_fraction(&format!("{}.{}", &digits[..1], &digits[1..]));
        format!("{m}e{exp}")
    } else if exp >= 0 {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{digits}{}", "0".repeat(point - digits.len()))
        } else {
            trim_fraction(&format!("{}.{}", &digits[..point], &digits[point..]))
        }
    } else {
        trim_fraction(&format!("0.{}{digits}", "0".repeat((-exp - 1) as usize)))
    };
    format!("{sign}{body}")
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.window_start.to_string(),
            format_float(r.static_edge_cut),
            format_float(r.dynamic_edge_cut),
            format_float(r.static_balance),
            format_float(r.dynamic_balance),
            format_float(r.normalized_dynamic_balance),
            r.moves.to_string(),
            r.repartitioned.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ReportError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header {header:?}"),
        )));
    }
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

/// JSON with the same fields as the CSV, numbers rounded the same way.
pub fn write_rows_json<W: Write>(mut out: W, rows: &[ReportRow]) -> Result<(), ReportError> {
    let round = |x: f64| -> serde_json::Value {
        format_float(x)
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map_or(serde_json::Value::Null, serde_json::Value::Number)
    };
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "window_start": r.window_start,
                "static_edge_cut": round(r.static_edge_cut),
                "dynamic_edge_cut": round(r.dynamic_edge_cut),
                "static_balance": round(r.static_balance),
                "dynamic_balance": round(r.dynamic_balance),
                "normalized_dynamic_balance": round(r.normalized_dynamic_balance),
                "moves": r.moves,
                "repartitioned": r.repartitioned,
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &values)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_rows_json<R: Read>(input: R) -> Result<Vec<ReportRow>, ReportError> {
    Ok(serde_json::from_reader(input)?)
}

/// A fixed-width quartile table, one metric per line.
pub fn format_summary(s: &ReportSummary) -> String {
    let mut out = format!(
        "{:<28}{:>12}{:>12}{:>12}{:>12}{:>12}\n",
        "metric", "min", "q1", "median", "q3", "max"
    );
    for (name, st) in s.metrics() {
        out.push_str(&format!(
            "{:<28}{:>12}{:>12}{:>12}{:>12}{:>12}\n",
            name,
            format_float(st.min),
            format_float(st.q1),
            format_float(st.median),
            format_float(st.q3),
            format_float(st.max)
        ));
    }
    out.push_str(&format!(
        "windows {}  repartitions {}  total_moves {}\n",
        s.windows, s.repartitions, s.total_moves
    ));
    out
}
