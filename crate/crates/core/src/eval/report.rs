//! Report tables: one row per query, one column per backend.
//!
//! - `rq1_accuracy`: accuracy percentage
//! - `rq2_latency`: three rows per query (P-50, P-90, Max), seconds
//! - `rq3_tokens`: mean total tokens, with the row's token source
//! - `summary`: per backend and category averages
//!
//! Every per-query table ends in an `annotation` column, reserved and empty.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use super::{BenchmarkReport, CellStats};
use crate::domain::{RunRecord, TokenSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json];

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected csv, markdown or json)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Json => "json",
        })
    }
}

/// `30`, `100`, `33.3`.
pub fn format_accuracy(pct: f64) -> String {
    if pct.fract() == 0.0 {
        format!("{pct:.0}")
    } else {
        format!("{pct:.1}")
    }
}

fn seconds(s: f64) -> String {
    format!("{s:.3}")
}

fn tokens(t: f64) -> String {
    format!("{t:.1}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.columns).chain(&self.rows) {
            let cells: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let line = |cells: &[String]| format!("| {} |\n", cells.iter().map(|c| c.replace('|', "\\|")).collect::<Vec<_>>().join(" | "));
        let mut out = line(&self.columns);
        out.push_str(&format!("|{}\n", "---|".repeat(self.columns.len())));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "table": self.name, "columns": self.columns, "rows": self.rows })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn per_query(report: &BenchmarkReport, name: &'static str, first: &[&str], value: impl Fn(&CellStats) -> String) -> Table {
    let mut columns: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    columns.extend(report.backends.iter().cloned());
    columns.push("annotation".into());
    let rows = report
        .queries
        .iter()
        .map(|q| {
            let mut row = vec![q.clone()];
            row.extend(report.backends.iter().map(|b| report.cell(q, b).map(&value).unwrap_or_default()));
            row.push(String::new());
            row
        })
        .collect();
    Table { name, columns, rows }
}

pub fn accuracy_table(report: &BenchmarkReport) -> Table {
    per_query(report, "rq1_accuracy", &["Query No."], |c| format_accuracy(c.accuracy_pct))
}

pub fn latency_table(report: &BenchmarkReport) -> Table {
    let mut columns = vec!["Query No.".to_string(), "Metric".to_string()];
    columns.extend(report.backends.iter().cloned());
    columns.push("annotation".into());
    let metrics: [(&str, fn(&CellStats) -> f64); 3] = [("P-50", |c| c.p50_s), ("P-90", |c| c.p90_s), ("Max", |c| c.max_s)];
    let mut rows = Vec::new();
    for q in &report.queries {
        for (label, get) in metrics {
            let mut row = vec![q.clone(), label.to_string()];
            row.extend(report.backends.iter().map(|b| report.cell(q, b).map(|c| seconds(get(c))).unwrap_or_default()));
            row.push(String::new());
            rows.push(row);
        }
    }
    Table {
        name: "rq2_latency",
        columns,
        rows,
    }
}

pub fn token_table(report: &BenchmarkReport) -> Table {
    let mut t = per_query(report, "rq3_tokens", &["Query No."], |c| tokens(c.avg_tokens));
    let at = t.columns.len() - 1;
    t.columns.insert(at, "token_source".into());
    for (row, q) in t.rows.iter_mut().zip(&report.queries) {
        let source = report
            .cells
            .iter()
            .filter(|c| &c.query_id == q)
            .filter_map(|c| c.token_source)
            .reduce(TokenSource::merge);
        row.insert(at, source.map(|s| s.to_string()).unwrap_or_default());
    }
    t
}

pub fn summary_table(report: &BenchmarkReport) -> Table {
    let columns = ["backend", "category", "queries", "accuracy_pct", "p50_s", "p90_s", "max_s", "avg_tokens"]
        .map(String::from)
        .to_vec();
    let rows = report
        .rollups
        .iter()
        .map(|r| {
            vec![
                r.backend_id.clone(),
                r.category.to_string(),
                r.queries.to_string(),
                format_accuracy((r.accuracy_pct * 10.0).round() / 10.0),
                seconds(r.p50_s),
                seconds(r.p90_s),
                seconds(r.max_s),
                tokens(r.avg_tokens),
            ]
        })
        .collect();
    Table {
        name: "summary",
        columns,
        rows,
    }
}

pub fn tables(report: &BenchmarkReport) -> Vec<Table> {
    vec![
        accuracy_table(report),
        latency_table(report),
        token_table(report),
        summary_table(report),
    ]
}

/// Writes every table in every requested format; returns the paths written.
pub fn emit_reports(report: &BenchmarkReport, out_dir: &Path, formats: &[ReportFormat]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for table in tables(report) {
        for format in formats {
            let body = match format {
                ReportFormat::Csv => table.to_csv(),
                ReportFormat::Markdown => table.to_markdown(),
                ReportFormat::Json => serde_json::to_string_pretty(&table.to_json()).expect("table serializes") + "\n",
            };
            let path = out_dir.join(format!("{}.{}", table.name, format.extension()));
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// One JSON object per line, traces included.
pub fn write_records(records: &[RunRecord], path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::super::aggregate;
    use super::super::testutil::record;
    use super::*;

    fn report() -> BenchmarkReport {
        let mut rs = Vec::new();
        for b in ["zeta", "alpha"] {
            for q in 1..=25 {
                for rep in 1..=2 {
                    rs.push(record(&format!("Q-{q:02}"), b, rep, 0.5 * rep as f64, 100, q != 9));
                }
            }
        }
        aggregate(&rs)
    }

    #[test]
    fn table_shapes() {
        let r = report();
        let rq1 = accuracy_table(&r);
        assert_eq!(rq1.columns, vec!["Query No.", "zeta", "alpha", "annotation"]);
        assert_eq!(rq1.rows.len(), 25);
        assert_eq!(rq1.rows[0], vec!["Q-01", "100", "100", ""]);
        assert_eq!(rq1.rows[8][1], "0");
        let rq2 = latency_table(&r);
        assert_eq!(rq2.rows.len(), 75);
        assert_eq!(rq2.rows[0][..3], ["Q-01", "P-50", "0.500"]);
        assert_eq!(rq2.rows[2][..3], ["Q-01", "Max", "1.000"]);
        let rq3 = token_table(&r);
        assert_eq!(rq3.columns, vec!["Query No.", "zeta", "alpha", "token_source", "annotation"]);
        assert_eq!(rq3.rows[0], vec!["Q-01", "100.0", "100.0", "approximated", ""]);
    }

    #[test]
    fn accuracy_formatting() {
        assert_eq!(format_accuracy(30.0), "30");
        assert_eq!(format_accuracy(0.0), "0");
        assert_eq!(format_accuracy(100.0), "100");
        assert_eq!(format_accuracy(100.0 / 3.0), "33.3");
    }

    #[test]
    fn emits_all_formats() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_reports(&report(), dir.path(), &ReportFormat::ALL).unwrap();
        assert_eq!(files.len(), 12);
        let csv = fs::read_to_string(dir.path().join("rq2_latency.csv")).unwrap();
        assert_eq!(csv.lines().count(), 76);
        let md = fs::read_to_string(dir.path().join("rq1_accuracy.md")).unwrap();
        assert!(md.starts_with("| Query No. | zeta | alpha | annotation |\n|---|---|---|---|\n"));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("rq3_tokens.json")).unwrap()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 25);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
