//! IT-operations tools T1..T9 behind a uniform contract, and the registry
//! that renders them into the prompt's `{tools}` / `{tool_names}` slots.
//!
//! Tool failures never abort the agent: they come back as a [`ToolResult`]
//! flagged `is_error` whose `content` becomes the next Observation.

mod args;
mod cluster;
mod metrics;
pub mod mlasp;
pub mod plot;
pub mod rag;
pub mod time;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use args::{ArgError, ToolArgs};
pub use cluster::{ListOperatorsTool, PodSummaryTool, ServiceSummaryTool};
pub use metrics::{metric_csv, plot_file_name, MetricNamesTool, MetricRangeTool, PlotIrateTool};
pub use mlasp::{mlasp_search, CapacityConfig, MlaspOutcome, MlaspTool};
pub use rag::{Corpus, RagTool};
pub use time::{time_info, TimeInfo, TimeTool, TimeUnit, TimeValue};

use crate::domain::{ToolId, ToolSpec};
use crate::sim::SimState;

/// Default seed for seeded tools when the caller does not provide one.
pub const DEFAULT_TOOL_SEED: u64 = 7;

/// Result of one tool invocation as seen by the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    #[serde(default)]
    pub is_error: bool,
}

impl ToolResult {
    pub fn ok(content: impl Into<String>, structured: serde_json::Value) -> Self {
        ToolResult {
            content: content.into(),
            structured: Some(structured),
            artifacts: Vec::new(),
            is_error: false,
        }
    }

    pub fn error(message: impl AsRef<str>) -> Self {
        ToolResult {
            content: format!("Error: {}", message.as_ref()),
            structured: None,
            artifacts: Vec::new(),
            is_error: true,
        }
    }
}

/// Per-call context: the simulator plus the run seed.
#[derive(Debug, Clone, Copy)]
pub struct ToolContext<'a> {
    pub state: &'a SimState,
    pub seed: u64,
}

impl<'a> ToolContext<'a> {
    pub fn new(state: &'a SimState) -> Self {
        ToolContext {
            state,
            seed: DEFAULT_TOOL_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub trait Tool: Send + Sync {
    fn spec(&self) -> &ToolSpec;

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("tool registry is empty")]
    Empty,
    #[error("duplicate action name `{0}`")]
    DuplicateAction(String),
    #[error("invalid action name `{0}`")]
    InvalidActionName(String),
}

/// The `{tools}` and `{tool_names}` prompt fragments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryRender {
    pub tools_block: String,
    pub tool_names_block: String,
}

/// One line per tool (`<name>: <description> Args: <fields>`) plus the
/// comma-separated action names, both in registry order.
pub fn render_registry(specs: &[ToolSpec]) -> Result<RegistryRender, RegistryError> {
    check_specs(specs.iter())?;
    let lines: Vec<String> = specs
        .iter()
        .map(|spec| {
            let fields = if spec.inputs.is_empty() {
                "none".to_string()
            } else {
                spec.inputs
                    .iter()
                    .map(|f| {
                        let req = if f.required { "required" } else { "optional" };
                        format!("{} ({}, {req})", f.name, f.kind)
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            format!("{}: {} Args: {fields}", spec.action_name, spec.description)
        })
        .collect();
    let names: Vec<&str> = specs.iter().map(|s| s.action_name.as_str()).collect();
    Ok(RegistryRender {
        tools_block: lines.join("\n"),
        tool_names_block: names.join(", "),
    })
}

fn check_specs<'a>(specs: impl Iterator<Item = &'a ToolSpec>) -> Result<(), RegistryError> {
    let mut seen = HashSet::new();
    let mut any = false;
    for spec in specs {
        any = true;
        if !ToolSpec::is_valid_action_name(&spec.action_name) {
            return Err(RegistryError::InvalidActionName(spec.action_name.clone()));
        }
        if !seen.insert(spec.action_name.as_str()) {
            return Err(RegistryError::DuplicateAction(spec.action_name.clone()));
        }
    }
    if any {
        Ok(())
    } else {
        Err(RegistryError::Empty)
    }
}

/// Ordered set of tools addressed by action name.
#[derive(Clone)]
pub struct ToolRegistry {
    tools: Vec<Arc<dyn Tool>>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.tools.iter().map(|t| &t.spec().action_name)).finish()
    }
}

impl ToolRegistry {
    pub fn new(tools: Vec<Arc<dyn Tool>>) -> Result<Self, RegistryError> {
        check_specs(tools.iter().map(|t| t.spec()))?;
        Ok(ToolRegistry { tools })
    }

    /// T1..T9 with the bundled documentation corpus.
    pub fn standard() -> Self {
        Self::standard_with_corpus(Arc::new(Corpus::bundled()))
    }

    pub fn standard_with_corpus(corpus: Arc<Corpus>) -> Self {
        let tools: Vec<Arc<dyn Tool>> = vec![
            Arc::new(MlaspTool::new()),
            Arc::new(RagTool::new(corpus)),
            Arc::new(TimeTool::new()),
            Arc::new(ListOperatorsTool::new()),
            Arc::new(PodSummaryTool::new()),
            Arc::new(ServiceSummaryTool::new()),
            Arc::new(MetricNamesTool::new()),
            Arc::new(MetricRangeTool::new()),
            Arc::new(PlotIrateTool::new()),
        ];
        ToolRegistry::new(tools).expect("standard registry is valid")
    }

    pub fn specs(&self) -> Vec<ToolSpec> {
        self.tools.iter().map(|t| t.spec().clone()).collect()
    }

    pub fn render(&self) -> RegistryRender {
        render_registry(&self.specs()).expect("registry validated at construction")
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn get(&self, action_name: &str) -> Option<&Arc<dyn Tool>> {
        self.tools.iter().find(|t| t.spec().action_name == action_name)
    }

    pub fn tool_id(&self, action_name: &str) -> Option<ToolId> {
        self.get(action_name).map(|t| t.spec().tool_id)
    }

    pub fn action_name(&self, id: ToolId) -> Option<&str> {
        self.tools
            .iter()
            .find(|t| t.spec().tool_id == id)
            .map(|t| t.spec().action_name.as_str())
    }

    /// Resolves the action, parses its input and runs it. Every failure is
    /// returned as an error result.
    pub fn dispatch(&self, action_name: &str, input: &str, ctx: &ToolContext<'_>) -> ToolResult {
        let Some(tool) = self.get(action_name.trim()) else {
            let names: Vec<&str> = self.tools.iter().map(|t| t.spec().action_name.as_str()).collect();
            return ToolResult::error(format!(
                "unknown action `{}`; valid actions are [{}]",
                action_name.trim(),
                names.join(", ")
            ));
        };
        match ToolArgs::parse(input, tool.spec()) {
            Ok(args) => tool.call(&args, ctx),
            Err(e) => ToolResult::error(e.to_string()),
        }
    }
}

/// `'text'` with embedded quotes escaped, the style used in observations.
pub(crate) fn quoted(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FieldKind, InputField};

    fn spec(name: &str) -> ToolSpec {
        ToolSpec {
            tool_id: ToolId::T1,
            action_name: name.into(),
            description: "Does a thing.".into(),
            inputs: vec![InputField::required("x", FieldKind::String)],
            output_doc: String::new(),
        }
    }

    #[test]
    fn standard_registry_renders_nine_names() {
        let render = ToolRegistry::standard().render();
        let names: Vec<&str> = render.tool_names_block.split(", ").collect();
        assert_eq!(names.len(), 9);
        assert!(names.contains(&"Get_timestamp_and_time_ISO"));
        assert!(names.contains(&"File_create_plot_irate"));
        assert!(names.contains(&"Summarize_Services_Information_In_OpenShift_Namespace"));
        assert_eq!(render.tools_block.lines().count(), 9);
    }

    #[test]
    fn rendered_lines_list_every_input_field() {
        for s in ToolRegistry::standard().specs() {
            let line = render_registry(std::slice::from_ref(&s)).unwrap().tools_block;
            assert_eq!(line.lines().count(), 1);
            for f in &s.inputs {
                assert!(line.contains(&f.name), "{} misses {}", s.action_name, f.name);
            }
        }
    }

    #[test]
    fn single_tool_is_one_line() {
        let r = render_registry(&[spec("A")]).unwrap();
        assert_eq!(r.tools_block, "A: Does a thing. Args: x (string, required)");
        assert_eq!(r.tool_names_block, "A");
    }

    #[test]
    fn duplicate_and_empty_rejected() {
        assert_eq!(
            render_registry(&[spec("A"), spec("A")]),
            Err(RegistryError::DuplicateAction("A".into()))
        );
        assert_eq!(render_registry(&[]), Err(RegistryError::Empty));
        assert_eq!(
            render_registry(&[spec("bad name")]),
            Err(RegistryError::InvalidActionName("bad name".into()))
        );
    }

    #[test]
    fn unknown_action_is_error_observation() {
        let state = SimState::new(crate::fixture::ClusterFixture::demo(), std::env::temp_dir());
        let r = ToolRegistry::standard().dispatch("Nope", "{}", &ToolContext::new(&state));
        assert!(r.is_error);
        assert!(r.content.starts_with("Error: unknown action `Nope`"));
    }

    #[test]
    fn tool_ids_map_one_to_one() {
        let reg = ToolRegistry::standard();
        for id in ToolId::ALL {
            let name = reg.action_name(id).unwrap();
            assert_eq!(reg.tool_id(name), Some(id));
        }
    }
}
