//! Shared domain types used across the agent, the simulator and the harness.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Query category: simple reasoning (at most one tool) or advanced
/// reasoning (two or more tools chained).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    SR,
    AR,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::SR => f.write_str("SR"),
            Category::AR => f.write_str("AR"),
        }
    }
}

/// Identifier of one of the nine built-in tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ToolId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
}

impl ToolId {
    pub const ALL: [ToolId; 9] = [
        ToolId::T1,
        ToolId::T2,
        ToolId::T3,
        ToolId::T4,
        ToolId::T5,
        ToolId::T6,
        ToolId::T7,
        ToolId::T8,
        ToolId::T9,
    ];
}

impl fmt::Display for ToolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ToolId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolId::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| format!("unknown tool id `{s}`"))
    }
}

/// Artifact check: the final answer must name a file matching
/// `filename_regex`, and when `must_exist` the file must be in the
/// artifact directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactCheck {
    pub filename_regex: String,
    #[serde(default = "yes")]
    pub must_exist: bool,
}

fn yes() -> bool {
    true
}

/// Declarative answer checks for one query.
///
/// `required_substrings` entries that start with `$` are symbolic references
/// resolved against the fixture, the tool registry or the clock; see
/// [`crate::eval::validator`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_substrings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_regex: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub required_tools: BTreeSet<ToolId>,
    /// Partial order: `(a, b)` means some call of `a` precedes the last call of `b`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_order: Vec<(ToolId, ToolId)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifact_checks: Vec<ArtifactCheck>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_failure: bool,
}

impl ValidatorSpec {
    pub fn has_checks(&self) -> bool {
        !self.required_substrings.is_empty()
            || self.answer_regex.is_some()
            || !self.required_tools.is_empty()
            || !self.artifact_checks.is_empty()
    }
}

/// One benchmark query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryCase {
    pub id: String,
    pub category: Category,
    #[serde(default)]
    pub expected_tools: BTreeSet<ToolId>,
    pub text: String,
    #[serde(default)]
    pub validator: ValidatorSpec,
}

/// Kind of a tool input field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    String,
    Number,
    Integer,
    Flag,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::String => "string",
            FieldKind::Number => "number",
            FieldKind::Integer => "integer",
            FieldKind::Flag => "flag",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputField {
    pub name: String,
    pub kind: FieldKind,
    pub required: bool,
}

impl InputField {
    pub fn required(name: &str, kind: FieldKind) -> Self {
        InputField {
            name: name.to_string(),
            kind,
            required: true,
        }
    }

    pub fn optional(name: &str, kind: FieldKind) -> Self {
        InputField {
            name: name.to_string(),
            kind,
            required: false,
        }
    }
}

/// A tool's callable contract as shown to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub tool_id: ToolId,
    pub action_name: String,
    pub description: String,
    pub inputs: Vec<InputField>,
    pub output_doc: String,
}

impl ToolSpec {
    pub fn is_valid_action_name(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

/// One step of an agent run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentEvent {
    Thought { text: String },
    Action { action: String, input: String },
    Observation { text: String },
    FinalAnswer { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("action at position {0} is not immediately followed by an observation")]
    ActionWithoutObservation(usize),
    #[error("final answer at position {0} is not the last event")]
    FinalAnswerNotLast(usize),
}

/// Ordered Thought/Action/Observation/FinalAnswer events of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentTrace {
    pub events: Vec<AgentEvent>,
}

impl AgentTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: AgentEvent) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Action names in call order.
    pub fn action_names(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter_map(|e| match e {
                AgentEvent::Action { action, .. } => Some(action.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn final_answer(&self) -> Option<&str> {
        match self.events.last() {
            Some(AgentEvent::FinalAnswer { text }) => Some(text),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        for (i, event) in self.events.iter().enumerate() {
            match event {
                AgentEvent::Action { .. } => {
                    if !matches!(self.events.get(i + 1), Some(AgentEvent::Observation { .. })) {
                        return Err(TraceError::ActionWithoutObservation(i));
                    }
                }
                AgentEvent::FinalAnswer { .. } if i + 1 != self.events.len() => {
                    return Err(TraceError::FinalAnswerNotLast(i));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Why a run did not produce a correct answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    None,
    Hallucination,
    Deflection,
    FlawedReasoning,
    Truncation,
    ToolMisuse,
    Timeout,
    ParseError,
    BackendError,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// How an agent run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Finished,
    MaxIterations,
    Timeout,
    ParseFailure,
    Truncated,
    BackendError,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// Where token counts came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenSource {
    ProviderReported,
    Approximated,
    Mixed,
}

impl TokenSource {
    pub fn merge(self, other: TokenSource) -> TokenSource {
        if self == other {
            self
        } else {
            TokenSource::Mixed
        }
    }
}

impl fmt::Display for TokenSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// Measurement of one repetition of one query on one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub category: Category,
    pub backend_id: String,
    pub repetition: u32,
    pub wall_seconds: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
    pub token_source: Option<TokenSource>,
    pub success: bool,
    pub failure_kind: FailureKind,
    /// True when the verdict matched the validator's expectation
    /// (a failure on an `expect_failure` query counts as met).
    pub expectation_met: bool,
    pub outcome: RunOutcome,
    pub final_answer: Option<String>,
    pub trace: AgentTrace,
}
