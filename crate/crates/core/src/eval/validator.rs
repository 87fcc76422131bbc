//! Programmatic answer grading.
//!
//! A [`ValidatorSpec`] is resolved once per sweep into a [`ResolvedValidator`]:
//! symbolic `$...` substrings are expanded against the fixture, the tool
//! registry and the clock's reference reading, and all regexes are compiled.
//! Supported references:
//!
//! - `$tools[*].action_name`
//! - `$operators[ns].name|version|status`
//! - `$running_pods[ns].name`, `$pods[ns].name`
//! - `$services[ns].name`, `$routes[ns].route` (services with a route only)
//! - `$metrics[ns].metric_name`
//! - `$clock.date(N)`, `$clock.weekday(N)`, `$clock.iso(N)`, `$clock.timestamp(N)`
//!   with `N` a signed offset in seconds from the reference reading
//!
//! A reference that expands to several values requires all of them.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::{FailureKind, QueryCase, RunOutcome, ToolId, ValidatorSpec};
use crate::react::AgentRun;
use crate::sim::SimState;
use crate::tools::time::{date_string, format_timestamp, iso_string, weekday_string};
use crate::tools::ToolRegistry;

static LIST_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\$([a-z_]+)\[([^\]]*)\]\.([a-z_]+)$").unwrap());
static CLOCK_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\$clock\.([a-z]+)\((-?\d+)\)$").unwrap());

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidatorError {
    #[error("query `{query}`: cannot resolve `{reference}`: {reason}")]
    Unresolvable {
        query: String,
        reference: String,
        reason: String,
    },
    #[error("query `{query}`: {reason}")]
    BadPattern { query: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct Requirement {
    /// The substring as written in the spec.
    pub source: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ResolvedValidator {
    pub query_id: String,
    pub tool_query: bool,
    pub required: Vec<Requirement>,
    pub answer_regex: Option<Regex>,
    pub required_tools: BTreeSet<ToolId>,
    pub tool_order: Vec<(ToolId, ToolId)>,
    pub artifact_checks: Vec<(Regex, bool)>,
    pub expect_failure: bool,
    action_ids: HashMap<String, ToolId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub success: bool,
    pub failure_kind: FailureKind,
    /// `success != expect_failure`.
    pub expectation_met: bool,
    /// First failing check, for humans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Expands one symbolic reference. Literal strings map to themselves.
pub fn resolve_reference(reference: &str, registry: &ToolRegistry, state: &SimState) -> Result<Vec<String>, String> {
    if !reference.starts_with('$') {
        return Ok(vec![reference.to_string()]);
    }
    if let Some(c) = CLOCK_REF.captures(reference) {
        let offset: f64 = c[2].parse().map_err(|_| "bad clock offset".to_string())?;
        let ts = state.clock().reference_now() + offset;
        let tz = state.timezone();
        let v = match &c[1] {
            "date" => date_string(ts, tz),
            "weekday" => weekday_string(ts, tz),
            "iso" => iso_string(ts, tz),
            "timestamp" => format_timestamp(ts),
            other => return Err(format!("unknown clock function `{other}`")),
        };
        return Ok(vec![v]);
    }
    let c = LIST_REF
        .captures(reference)
        .ok_or_else(|| "expected `$source[arg].field` or `$clock.fn(N)`".to_string())?;
    let (source, arg, field) = (&c[1], &c[2], &c[3]);
    let ns = arg;
    let values: Vec<String> = match (source, field) {
        ("tools", "action_name") if arg == "*" => registry.specs().into_iter().map(|s| s.action_name).collect(),
        ("operators", f) => {
            let ops = state.list_operators(ns);
            match f {
                "name" => ops.into_iter().map(|o| o.name).collect(),
                "version" => ops.into_iter().map(|o| o.version).collect(),
                "status" => ops.into_iter().map(|o| o.status).collect(),
                _ => return Err(format!("unknown operator field `{f}`")),
            }
        }
        ("running_pods", "name") => state.pod_summary(ns).running_pods.into_iter().map(|p| p.name).collect(),
        ("pods", "name") => state
            .fixture()
            .namespace(ns)
            .map(|n| n.pods.iter().map(|p| p.name.clone()).collect())
            .unwrap_or_default(),
        ("services", "name") => state.service_summary(ns).into_iter().map(|s| s.name).collect(),
        ("routes", "route") => state
            .service_summary(ns)
            .into_iter()
            .filter(|s| s.has_route())
            .map(|s| s.route)
            .collect(),
        ("metrics", "metric_name") => state.metric_names("namespace", ns),
        _ => return Err(format!("unknown reference `{source}[..].{field}`")),
    };
    let mut values = values;
    values.sort();
    values.dedup();
    if values.is_empty() {
        return Err("resolves to no values in the fixture".into());
    }
    Ok(values)
}

pub fn resolve_validator(
    case: &QueryCase,
    registry: &ToolRegistry,
    state: &SimState,
) -> Result<ResolvedValidator, ValidatorError> {
    let spec: &ValidatorSpec = &case.validator;
    let bad = |reason: String| ValidatorError::BadPattern {
        query: case.id.clone(),
        reason,
    };
    let mut required = Vec::new();
    for s in &spec.required_substrings {
        let values = resolve_reference(s, registry, state).map_err(|reason| ValidatorError::Unresolvable {
            query: case.id.clone(),
            reference: s.clone(),
            reason,
        })?;
        required.push(Requirement {
            source: s.clone(),
            values,
        });
    }
    let answer_regex = spec
        .answer_regex
        .as_deref()
        .map(Regex::new)
        .transpose()
        .map_err(|e| bad(format!("bad answer_regex: {e}")))?;
    let artifact_checks = spec
        .artifact_checks
        .iter()
        .map(|a| {
            Regex::new(&a.filename_regex)
                .map(|r| (r, a.must_exist))
                .map_err(|e| bad(format!("bad filename_regex: {e}")))
        })
        .collect::<Result<_, _>>()?;
    for id in spec.required_tools.iter().chain(spec.tool_order.iter().flat_map(|(a, b)| [a, b])) {
        if registry.action_name(*id).is_none() {
            return Err(bad(format!("tool {id} is not in the registry")));
        }
    }
    Ok(ResolvedValidator {
        query_id: case.id.clone(),
        tool_query: !case.expected_tools.is_empty(),
        required,
        answer_regex,
        required_tools: spec.required_tools.clone(),
        tool_order: spec.tool_order.clone(),
        artifact_checks,
        expect_failure: spec.expect_failure,
        action_ids: registry.specs().into_iter().map(|s| (s.action_name, s.tool_id)).collect(),
    })
}

fn outcome_kind(outcome: RunOutcome) -> FailureKind {
    match outcome {
        RunOutcome::Finished => FailureKind::None,
        RunOutcome::Timeout => FailureKind::Timeout,
        RunOutcome::Truncated => FailureKind::Truncation,
        RunOutcome::ParseFailure => FailureKind::ParseError,
        RunOutcome::BackendError => FailureKind::BackendError,
        // Looping without converging on an answer.
        RunOutcome::MaxIterations => FailureKind::FlawedReasoning,
    }
}

impl ResolvedValidator {
    /// Grades a finished (or aborted) run. Checks run in order outcome,
    /// content, tools, artifacts; the first failing one picks the kind.
    pub fn validate(&self, run: &AgentRun, artifact_dir: &Path) -> Verdict {
        let (failure_kind, detail) = self.first_failure(run, artifact_dir);
        let success = failure_kind == FailureKind::None;
        Verdict {
            success,
            failure_kind,
            expectation_met: success != self.expect_failure,
            detail,
        }
    }

    fn first_failure(&self, run: &AgentRun, artifact_dir: &Path) -> (FailureKind, Option<String>) {
        let kind = outcome_kind(run.outcome);
        if kind != FailureKind::None {
            return (kind, Some(format!("run ended with outcome {}", run.outcome)));
        }
        let Some(answer) = run.final_answer.as_deref() else {
            return (FailureKind::ParseError, Some("no final answer".into()));
        };
        let actions: Vec<Option<ToolId>> = run
            .trace
            .action_names()
            .iter()
            .map(|a| self.action_ids.get(a.trim()).copied())
            .collect();

        let content_kind = if actions.is_empty() {
            if self.tool_query {
                FailureKind::Deflection
            } else {
                FailureKind::Hallucination
            }
        } else {
            FailureKind::FlawedReasoning
        };
        for req in &self.required {
            if let Some(missing) = req.values.iter().find(|v| !answer.contains(v.as_str())) {
                return (content_kind, Some(format!("answer lacks `{missing}` (from {})", req.source)));
            }
        }
        if let Some(re) = &self.answer_regex {
            if !re.is_match(answer) {
                return (content_kind, Some(format!("answer does not match /{}/", re.as_str())));
            }
        }

        let tool_kind = if actions.is_empty() {
            FailureKind::Hallucination
        } else {
            FailureKind::ToolMisuse
        };
        for id in &self.required_tools {
            if !actions.contains(&Some(*id)) {
                return (tool_kind, Some(format!("tool {id} was not called")));
            }
        }
        for (a, b) in &self.tool_order {
            let first_a = actions.iter().position(|x| *x == Some(*a));
            let last_b = actions.iter().rposition(|x| *x == Some(*b));
            match (first_a, last_b) {
                (Some(i), Some(j)) if i < j => {}
                _ => return (tool_kind, Some(format!("{a} must be called before {b}"))),
            }
        }

        for (re, must_exist) in &self.artifact_checks {
            let mut names = re.find_iter(answer).map(|m| m.as_str()).peekable();
            if names.peek().is_none() {
                return (FailureKind::Hallucination, Some(format!("answer names no file matching /{}/", re.as_str())));
            }
            if *must_exist && !names.any(|n| artifact_dir.join(n).is_file()) {
                return (FailureKind::Hallucination, Some("named artifact does not exist".into()));
            }
        }
        (FailureKind::None, None)
    }
}

/// Resolves every validator of a suite up front.
pub fn resolve_suite(
    suite: &[QueryCase],
    registry: &ToolRegistry,
    state: &SimState,
) -> Result<Vec<ResolvedValidator>, ValidatorError> {
    suite.iter().map(|q| resolve_validator(q, registry, state)).collect()
}
