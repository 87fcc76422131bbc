//! Benchmark harness: validators, the suite runner, aggregation into
//! accuracy / latency / token tables, and report emission.

pub mod report;
pub mod runner;
pub mod validator;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Category, RunRecord, TokenSource};

pub use report::{emit_reports, format_accuracy, write_records, ReportFormat};
pub use runner::{run_benchmark, run_benchmark_with, run_one, SuiteRunConfig};
pub use validator::{resolve_suite, resolve_validator, ResolvedValidator, ValidatorError, Verdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("percentile of an empty list")]
    EmptyInput,
    #[error("percentile rank {0} is outside (0, 100]")]
    BadRank(f64),
    #[error(transparent)]
    Validator(#[from] ValidatorError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Nearest-rank percentile: the element at 1-based index `ceil(p/100 * n)`
/// of the ascending sort.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(EvalError::BadRank(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // p*n first keeps integer ranks exact.
    let rank = ((p * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// One (query, backend) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub query_id: String,
    pub category: Category,
    pub backend_id: String,
    pub repetitions: u32,
    pub successes: u32,
    pub accuracy_pct: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub max_s: f64,
    pub avg_tokens: f64,
    pub token_source: Option<TokenSource>,
}

/// Per-backend, per-category averages of the per-query cell values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRollup {
    pub backend_id: String,
    pub category: Category,
    pub queries: usize,
    pub accuracy_pct: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub max_s: f64,
    pub avg_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Backend ids in order of first appearance.
    pub backends: Vec<String>,
    /// Query ids in order of first appearance.
    pub queries: Vec<String>,
    pub cells: Vec<CellStats>,
    pub rollups: Vec<CategoryRollup>,
}

impl BenchmarkReport {
    pub fn cell(&self, query_id: &str, backend_id: &str) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.query_id == query_id && c.backend_id == backend_id)
    }

    pub fn rollup(&self, backend_id: &str, category: Category) -> Option<&CategoryRollup> {
        self.rollups
            .iter()
            .find(|r| r.backend_id == backend_id && r.category == category)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Accuracy as `100 × successes / repetitions`.
pub fn accuracy_pct(successes: u32, repetitions: u32) -> f64 {
    if repetitions == 0 {
        0.0
    } else {
        100.0 * successes as f64 / repetitions as f64
    }
}

pub fn aggregate(records: &[RunRecord]) -> BenchmarkReport {
    let backends = first_seen(records.iter().map(|r| r.backend_id.as_str()));
    let queries = first_seen(records.iter().map(|r| r.query_id.as_str()));
    let mut groups: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let q = queries.iter().position(|x| *x == r.query_id).expect("seen");
        let b = backends.iter().position(|x| *x == r.backend_id).expect("seen");
        groups.entry((b, q)).or_default().push(r);
    }
    // Cells ordered backend-major, then query.
    let cells: Vec<CellStats> = groups
        .into_values()
        .map(|rs| {
            let walls: Vec<f64> = rs.iter().map(|r| r.wall_seconds).collect();
            let reps = rs.len() as u32;
            let successes = rs.iter().filter(|r| r.success).count() as u32;
            let token_source = rs
                .iter()
                .filter_map(|r| r.token_source)
                .reduce(TokenSource::merge);
            CellStats {
                query_id: rs[0].query_id.clone(),
                category: rs[0].category,
                backend_id: rs[0].backend_id.clone(),
                repetitions: reps,
                successes,
                accuracy_pct: accuracy_pct(successes, reps),
                p50_s: percentile(&walls, 50.0).expect("nonempty"),
                p90_s: percentile(&walls, 90.0).expect("nonempty"),
                max_s: percentile(&walls, 100.0).expect("nonempty"),
                avg_tokens: mean(rs.iter().map(|r| r.total_tokens as f64)),
                token_source,
            }
        })
        .collect();
    let mut rollups = Vec::new();
    for b in &backends {
        for cat in [Category::SR, Category::AR] {
            let cs: Vec<&CellStats> = cells
                .iter()
                .filter(|c| &c.backend_id == b && c.category == cat)
                .collect();
            if cs.is_empty() {
                continue;
            }
            rollups.push(CategoryRollup {
                backend_id: b.clone(),
                category: cat,
                queries: cs.len(),
                accuracy_pct: mean(cs.iter().map(|c| c.accuracy_pct)),
                p50_s: mean(cs.iter().map(|c| c.p50_s)),
                p90_s: mean(cs.iter().map(|c| c.p90_s)),
                max_s: mean(cs.iter().map(|c| c.max_s)),
                avg_tokens: mean(cs.iter().map(|c| c.avg_tokens)),
            });
        }
    }
    BenchmarkReport {
        backends,
        queries,
        cells,
        rollups,
    }
}
