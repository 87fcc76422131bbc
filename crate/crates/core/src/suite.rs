//! Query suites: the bundled 25-query suite and user-supplied suite files.

use std::collections::HashSet;

use crate::domain::{Category, QueryCase};

pub const BUILTIN_SUITE: &str = include_str!("../resources/suite.yaml");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuiteError {
    #[error("suite syntax error: {0}")]
    Syntax(String),
    #[error("duplicate query id `{0}`")]
    DuplicateId(String),
    #[error("query `{id}`: {reason}")]
    Invalid { id: String, reason: String },
}

/// The 25 built-in evaluation queries.
pub fn builtin_suite() -> Vec<QueryCase> {
    load_suite(BUILTIN_SUITE).expect("bundled suite is valid")
}

pub fn load_suite(source: &str) -> Result<Vec<QueryCase>, SuiteError> {
    let cases: Vec<QueryCase> =
        serde_yaml::from_str(source).map_err(|e| SuiteError::Syntax(e.to_string()))?;
    validate_suite(&cases)?;
    Ok(cases)
}

pub fn validate_suite(cases: &[QueryCase]) -> Result<(), SuiteError> {
    let mut ids = HashSet::new();
    for case in cases {
        let invalid = |reason: &str| SuiteError::Invalid {
            id: case.id.clone(),
            reason: reason.to_string(),
        };
        if !ids.insert(case.id.as_str()) {
            return Err(SuiteError::DuplicateId(case.id.clone()));
        }
        if case.text.trim().is_empty() {
            return Err(invalid("empty query text"));
        }
        match case.category {
            Category::AR if case.expected_tools.len() < 2 => {
                return Err(invalid("AR queries need at least two expected tools"))
            }
            Category::SR if case.expected_tools.len() > 1 => {
                return Err(invalid("SR queries use at most one tool"))
            }
            _ => {}
        }
        if !case.validator.expect_failure && !case.validator.has_checks() {
            return Err(invalid("validator declares no checks"));
        }
        if let Some(re) = &case.validator.answer_regex {
            regex::Regex::new(re).map_err(|e| invalid(&format!("bad answer_regex: {e}")))?;
        }
        for check in &case.validator.artifact_checks {
            regex::Regex::new(&check.filename_regex)
                .map_err(|e| invalid(&format!("bad filename_regex: {e}")))?;
        }
    }
    Ok(())
}

pub fn serialize_suite(cases: &[QueryCase]) -> String {
    serde_yaml::to_string(cases).expect("suite serializes")
}

pub fn find<'a>(suite: &'a [QueryCase], id: &str) -> Option<&'a QueryCase> {
    suite.iter().find(|q| q.id == id)
}
