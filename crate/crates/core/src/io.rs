//! Trace CSV and summary JSON serialization.
//!
//! Trace CSV (wide form), one row per recorded step:
//!
//! ```text
//! step,time,influx,cum_frac,q_<label>,M_<label>,V_<label>,...
//! ```
//!
//! Site column groups follow declaration order. Numbers carry 9
//! significant digits. `cum_frac` is `nan` for incomplete runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::circuit::SimulationTrace;
use crate::error::{Error, Result};

/// Formats `x` with 9 significant digits, like C's `%.9g` without
/// trailing-zero stripping.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("exponent digits");
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        sci
    }
}

pub fn trace_header(labels: &[String]) -> Vec<String> {
    let mut header: Vec<String> = ["step", "time", "influx", "cum_frac"].iter().map(|s| s.to_string()).collect();
    for label in labels {
        header.push(format!("q_{label}"));
        header.push(format!("M_{label}"));
        header.push(format!("V_{label}"));
    }
    header
}

pub fn write_trace_to<W: Write>(trace: &SimulationTrace, out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(trace_header(&trace.labels))?;
    let total = trace.is_complete().then_some(trace.terminal.delivered);
    for r in &trace.records {
        let cum = match total {
            Some(t) if t > 0.0 => r.delivered / t,
            Some(_) => 1.0,
            None => f64::NAN,
        };
        let mut row = vec![
            r.step.to_string(),
            format_sig9(r.step as f64 * trace.dt),
            format_sig9(r.influx),
            format_sig9(cum),
        ];
        for i in 0..trace.labels.len() {
            row.push(format_sig9(r.q[i]));
            row.push(format_sig9(r.memristance[i]));
            row.push(format_sig9(r.voltage[i]));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_trace(trace: &SimulationTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    write_trace_to(trace, BufWriter::new(file)).map_err(|source| Error::Csv { path: path.into(), source })
}

/// Trace columns read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub labels: Vec<String>,
    pub step: Vec<u64>,
    pub time: Vec<f64>,
    pub influx: Vec<f64>,
    pub cum_frac: Vec<f64>,
    /// Indexed `[site][row]`.
    pub q: Vec<Vec<f64>>,
    pub memristance: Vec<Vec<f64>>,
    pub voltage: Vec<Vec<f64>>,
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceTable> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::MalformedTrace { path: path.into(), reason };
    let mut reader = csv::Reader::from_path(path).map_err(|source| match source.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.into(), source },
        kind => Error::MalformedTrace { path: path.into(), reason: format!("{kind:?}") },
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|source| Error::Csv { path: path.into(), source })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 4 || header[..4] != ["step", "time", "influx", "cum_frac"] || !(header.len() - 4).is_multiple_of(3) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let mut labels = Vec::new();
    for group in header[4..].chunks(3) {
        let label = group[0].strip_prefix("q_").ok_or_else(|| malformed(format!("bad column {}", group[0])))?;
        if group[1] != format!("M_{label}") || group[2] != format!("V_{label}") {
            return Err(malformed(format!("bad column group {group:?}")));
        }
        labels.push(label.to_string());
    }
    let n = labels.len();
    let mut table = TraceTable {
        labels,
        step: Vec::new(),
        time: Vec::new(),
        influx: Vec::new(),
        cum_frac: Vec::new(),
        q: vec![Vec::new(); n],
        memristance: vec![Vec::new(); n],
        voltage: vec![Vec::new(); n],
    };
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|source| Error::Csv { path: path.into(), source })?;
        let num = |k: usize| -> Result<f64> {
            row.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| malformed(format!("row {}: column {} is not a number", line + 1, header[k])))
        };
        table.step.push(
            row.get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(format!("row {}: bad step", line + 1)))?,
        );
        table.time.push(num(1)?);
        table.influx.push(num(2)?);
        table.cum_frac.push(num(3)?);
        for i in 0..n {
            table.q[i].push(num(4 + 3 * i)?);
            table.memristance[i].push(num(5 + 3 * i)?);
            table.voltage[i].push(num(6 + 3 * i)?);
        }
    }
    Ok(table)
}

/// Writes any serializable summary document as pretty JSON.
pub fn write_summary<T: Serialize>(summary: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(summary).map_err(|source| Error::Json { path: path.into(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}
