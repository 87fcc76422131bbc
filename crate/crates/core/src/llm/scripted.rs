//! Deterministic backends: the golden policy, verbatim replays, and fault
//! injectors that reproduce typical agent failure modes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::golden::{self, classify, failed, json_args, prometheus, view, Arg, Intent, PromptView, Reply};
use super::{BackendError, CompletionBackend, CompletionRequest, CompletionResponse};
use crate::domain::QueryCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Skips the time tool and plugs invented timestamps into metric tools.
    HallucinateDates,
    /// Answers tool questions with generic advice instead of using tools.
    Deflect,
    /// Calls the downstream tool first with guessed parameters, then gives up.
    FlawedOrder,
    /// The final completion runs into the output limit with no marker.
    Truncate,
    /// Sleeps on every call.
    Stall,
}

impl FaultKind {
    pub const ALL: [FaultKind; 5] = [
        FaultKind::HallucinateDates,
        FaultKind::Deflect,
        FaultKind::FlawedOrder,
        FaultKind::Truncate,
        FaultKind::Stall,
    ];
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("enum serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

impl FromStr for FaultKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown fault kind `{s}`"))
    }
}

pub const DEFAULT_STALL_MS: u64 = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedBehavior {
    Golden,
    /// Completion `i` answers the prompt holding `i` observations; the last
    /// item repeats once the list is exhausted.
    Replay(Vec<String>),
    Fault {
        kind: FaultKind,
        #[serde(default = "default_stall")]
        stall_ms: u64,
    },
}

fn default_stall() -> u64 {
    DEFAULT_STALL_MS
}

/// Per-query behaviours loaded from YAML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyPack {
    pub id: String,
    #[serde(default = "golden_behavior", with = "serde_yaml::with::singleton_map")]
    pub default: ScriptedBehavior,
    #[serde(default, with = "serde_yaml::with::singleton_map_recursive")]
    pub queries: BTreeMap<String, ScriptedBehavior>,
}

fn golden_behavior() -> ScriptedBehavior {
    ScriptedBehavior::Golden
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyPackError {
    #[error("policy pack syntax: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error("policy pack: {0}")]
    Invalid(String),
}

pub fn load_policy_pack(source: &str) -> Result<PolicyPack, PolicyPackError> {
    let pack: PolicyPack = serde_yaml::from_str(source)?;
    if pack.id.trim().is_empty() {
        return Err(PolicyPackError::Invalid("id must not be empty".into()));
    }
    let all = std::iter::once(&pack.default).chain(pack.queries.values());
    for b in all {
        if matches!(b, ScriptedBehavior::Replay(items) if items.is_empty()) {
            return Err(PolicyPackError::Invalid("replay lists must not be empty".into()));
        }
    }
    Ok(pack)
}

/// Scripted completion backend. Responses are a pure function of the
/// prompt (stall faults add a sleep but do not change the text).
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    id: String,
    default: ScriptedBehavior,
    /// Question text → behaviour, for policy packs.
    by_question: Vec<(String, ScriptedBehavior)>,
}

impl ScriptedBackend {
    pub fn golden() -> Self {
        Self::uniform("scripted:golden", ScriptedBehavior::Golden)
    }

    pub fn fault(kind: FaultKind) -> Self {
        Self::uniform(
            &format!("scripted:fault:{kind}"),
            ScriptedBehavior::Fault {
                kind,
                stall_ms: DEFAULT_STALL_MS,
            },
        )
    }

    pub fn stall(stall_ms: u64) -> Self {
        Self::uniform(
            "scripted:fault:stall",
            ScriptedBehavior::Fault {
                kind: FaultKind::Stall,
                stall_ms,
            },
        )
    }

    pub fn replay(id: &str, items: Vec<String>) -> Self {
        Self::uniform(id, ScriptedBehavior::Replay(items))
    }

    pub fn uniform(id: &str, behavior: ScriptedBehavior) -> Self {
        ScriptedBackend {
            id: id.to_string(),
            default: behavior,
            by_question: Vec::new(),
        }
    }

    /// Binds pack entries to the suite's question texts; unknown query ids
    /// are a configuration error.
    pub fn from_pack(pack: &PolicyPack, suite: &[QueryCase]) -> Result<Self, PolicyPackError> {
        let mut by_question = Vec::new();
        for (qid, behavior) in &pack.queries {
            let case = suite
                .iter()
                .find(|c| &c.id == qid)
                .ok_or_else(|| PolicyPackError::Invalid(format!("unknown query id `{qid}`")))?;
            by_question.push((case.text.clone(), behavior.clone()));
        }
        Ok(ScriptedBackend {
            id: format!("scripted:pack:{}", pack.id),
            default: pack.default.clone(),
            by_question,
        })
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }

    fn behavior_for(&self, question: &str) -> &ScriptedBehavior {
        self.by_question
            .iter()
            .find(|(q, _)| q == question)
            .map(|(_, b)| b)
            .unwrap_or(&self.default)
    }
}

impl CompletionBackend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        if request.prompt.is_empty() {
            return Err(BackendError::InvalidResponse("empty prompt".into()));
        }
        let v = view(&request.prompt);
        let text = match self.behavior_for(&v.question) {
            ScriptedBehavior::Golden => golden::golden_reply(&v).render(),
            ScriptedBehavior::Replay(items) => items[v.observations.min(items.len() - 1)].clone(),
            ScriptedBehavior::Fault { kind: FaultKind::Stall, stall_ms } => {
                let stall = Duration::from_millis(*stall_ms);
                match request.timeout {
                    Some(t) if t <= stall => {
                        std::thread::sleep(t);
                        return Err(BackendError::Timeout);
                    }
                    _ => std::thread::sleep(stall),
                }
                golden::golden_reply(&v).render()
            }
            ScriptedBehavior::Fault { kind, .. } => fault_reply(*kind, &v, request.max_output_chars),
        };
        Ok(CompletionResponse::approximated(&request.prompt, text))
    }
}

/// Timestamps a model might make up: inside the data, but not the window
/// the question asked for.
const INVENTED_START: &str = "1729000000";
const INVENTED_END: &str = "1729172800";

fn fault_reply(kind: FaultKind, v: &PromptView, max_chars: usize) -> String {
    let intent = classify(&v.question);
    match kind {
        FaultKind::HallucinateDates => match &intent {
            Intent::Plot(w) | Intent::Csv(w) => {
                let csv = matches!(intent, Intent::Csv(_));
                let tool = if csv { golden::T8 } else { golden::T9 };
                let services = v.steps.iter().find(|s| s.action == golden::T6);
                match (services, v.steps.iter().find(|s| s.action == tool)) {
                    (Some(svc_step), None) if !failed(&svc_step.observation) => {
                        let Some((svc, port)) = prometheus(&svc_step.observation) else {
                            return golden::golden_reply(v).render();
                        };
                        let mut args = vec![
                            ("prom_service", Arg::S(svc)),
                            ("prom_namespace", Arg::S(w.namespace.clone())),
                            ("prom_port", Arg::N(port)),
                            ("metric_name", Arg::S(w.metric.clone())),
                            ("metric_range_start", Arg::N(INVENTED_START.into())),
                            ("metric_range_end", Arg::N(INVENTED_END.into())),
                        ];
                        if csv {
                            args.push(("format", Arg::S("csv".into())));
                        }
                        Reply::Act {
                            thought: format!(
                                "The time range starts {} {} ago, which is around timestamp {INVENTED_START}, until now, which is around {INVENTED_END}.",
                                w.amount, w.unit
                            ),
                            action: tool.to_string(),
                            input: json_args(&args),
                        }
                        .render()
                    }
                    _ => golden::golden_reply(v).render(),
                }
            }
            _ => golden::golden_reply(v).render(),
        },
        FaultKind::Deflect if intent.uses_tools() => Reply::Final {
            answer: "You can find this out yourself: open a terminal, log in with the oc command line client and inspect the relevant resources, or check the OpenShift web console. I recommend consulting the platform documentation for details.".into(),
        }
        .render(),
        FaultKind::FlawedOrder if intent.is_multi_tool() => {
            if v.steps.is_empty() {
                let (tool, mut args) = match &intent {
                    Intent::PromMetrics { namespace, .. } => (
                        golden::T7,
                        vec![
                            ("filter_name", Arg::S("namespace".into())),
                            ("filter_value", Arg::S(namespace.clone())),
                        ],
                    ),
                    Intent::Plot(_) => (golden::T9, Vec::new()),
                    _ => (golden::T8, Vec::new()),
                };
                let ns = match &intent {
                    Intent::PromMetrics { namespace, .. } => namespace.clone(),
                    Intent::Plot(w) | Intent::Csv(w) => w.namespace.clone(),
                    _ => "default".into(),
                };
                args.extend([
                    ("prom_service", Arg::S("prometheus".into())),
                    ("prom_namespace", Arg::S(ns)),
                    ("prom_port", Arg::N("9091".into())),
                ]);
                if let Intent::Plot(w) | Intent::Csv(w) = &intent {
                    args.extend([
                        ("metric_name", Arg::S(w.metric.clone())),
                        ("metric_range_start", Arg::N(INVENTED_START.into())),
                        ("metric_range_end", Arg::N(INVENTED_END.into())),
                    ]);
                }
                Reply::Act {
                    thought: "The Prometheus service is probably called prometheus on its default port, so I can query it directly.".into(),
                    action: tool.into(),
                    input: json_args(&args),
                }
                .render()
            } else {
                Reply::Final {
                    answer: "I could not find any relevant information.".into(),
                }
                .render()
            }
        }
        FaultKind::Truncate => match golden::golden_reply(v) {
            // The answer keeps going past the limit, without its marker.
            Reply::Final { answer } => format!("{answer}\n").chars().cycle().take(max_chars).collect(),
            act => act.render(),
        },
        _ => golden::golden_reply(v).render(),
    }
}
