//! CSV, JSON-lines and summary output.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::sweep::ReportRecord;

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 20] = [
    "index",
    "k",
    "s",
    "sides",
    "N",
    "truncated_sides",
    "P",
    "X",
    "root",
    "main_term",
    "secondary_term",
    "ratio",
    "classification",
    "min_side_dominates",
    "hypothesis",
    "circle_error",
    "unbalanced_constant",
    "singular_integral_ratio",
    "skipped",
    "bucket",
];

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

pub fn render_csv(records: &[ReportRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        let bucket = r
            .p
            .parse::<num_bigint::BigUint>()
            .map(|p| p.bits().saturating_sub(1))
            .map_err(|e| Error::Serialization(e.to_string()))?;
        w.write_record([
            r.index.to_string(),
            r.k.to_string(),
            r.s.to_string(),
            join(&r.sides),
            r.n.to_string(),
            join(&r.truncated_sides),
            r.p.clone(),
            r.truncated_sides.last().copied().unwrap_or(0).to_string(),
            opt(&r.root),
            r.main_term.to_string(),
            r.secondary_term.to_string(),
            opt(&r.ratio),
            format!("{:?}", r.classification),
            r.min_side_dominates.to_string(),
            r.hypothesis.to_string(),
            opt(&r.circle_error),
            opt(&r.unbalanced_constant),
            opt(&r.singular_integral_ratio),
            r.skipped.clone().unwrap_or_default(),
            bucket.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn render_jsonl(records: &[ReportRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Serialization(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<ReportRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Serialization(e.to_string())))
        .collect()
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `{prefix}.csv`, `{prefix}.jsonl` and `{prefix}.summary.json`;
/// returns the three paths.
pub fn emit_report<S: Serialize>(prefix: &Path, records: &[ReportRecord], summary: &S) -> Result<[PathBuf; 3]> {
    let summary = serde_json::to_string_pretty(summary).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok([
        write(with_suffix(prefix, ".csv"), &render_csv(records)?)?,
        write(with_suffix(prefix, ".jsonl"), &render_jsonl(records)?)?,
        write(with_suffix(prefix, ".summary.json"), &(summary + "\n"))?,
    ])
}
