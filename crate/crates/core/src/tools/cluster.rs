//! T4–T6: read-only cluster inventory.

use super::{quoted, Tool, ToolArgs, ToolContext, ToolResult};
use crate::domain::{FieldKind, InputField, ToolId, ToolSpec};
use crate::fixture::{OperatorInfo, PortInfo, ServiceInfo};
use crate::sim::PodSummary;

fn namespace_spec(tool_id: ToolId, action_name: &str, description: &str, output_doc: &str) -> ToolSpec {
    ToolSpec {
        tool_id,
        action_name: action_name.into(),
        description: description.into(),
        inputs: vec![InputField::required("namespace", FieldKind::String)],
        output_doc: output_doc.into(),
    }
}

fn render_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

fn render_port(p: &PortInfo) -> String {
    format!(
        "PortInfo (port = {}, name = {}, protocol = {})",
        p.port,
        quoted(p.display_name()),
        quoted(&p.protocol.to_string())
    )
}

pub(crate) fn render_service(s: &ServiceInfo) -> String {
    format!(
        "ServiceInfo (name = {}, ports = {}, route = {})",
        quoted(&s.name),
        render_list(&s.ports, render_port),
        quoted(&s.route)
    )
}

fn render_operator(o: &OperatorInfo) -> String {
    format!(
        "OperatorInfo (name = {}, version = {}, status = {})",
        quoted(&o.name),
        quoted(&o.version),
        quoted(&o.status)
    )
}

fn render_pods(sum: &PodSummary) -> String {
    let c = &sum.pod_counts;
    format!(
        "namespace = {} pod_counts = {{Running: {}, Succeeded: {}, Pending: {}, Failed: {}}} running_pods = {}",
        quoted(&sum.namespace),
        c.running,
        c.succeeded,
        c.pending,
        c.failed,
        render_list(&sum.running_pods, |p| format!(
            "PodInfo (name = {}, services = {})",
            quoted(&p.name),
            render_list(&p.services, render_service)
        ))
    )
}

fn namespace_arg(args: &ToolArgs) -> Result<String, ToolResult> {
    match args.req_str("namespace") {
        Ok(ns) if !ns.trim().is_empty() => Ok(ns.trim().to_string()),
        Ok(_) => Err(ToolResult::error("namespace must not be empty")),
        Err(e) => Err(ToolResult::error(e.to_string())),
    }
}

/// T4.
pub struct ListOperatorsTool {
    spec: ToolSpec,
}

impl ListOperatorsTool {
    pub fn new() -> Self {
        ListOperatorsTool {
            spec: namespace_spec(
                ToolId::T4,
                "List_OpenShift_Operators",
                "Lists the operators installed in an OpenShift namespace with their name, version and status.",
                "namespace and operators list",
            ),
        }
    }
}

impl Default for ListOperatorsTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for ListOperatorsTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let ns = match namespace_arg(args) {
            Ok(ns) => ns,
            Err(e) => return e,
        };
        let ops = ctx.state.list_operators(&ns);
        let content = format!("namespace = {} operators = {}", quoted(&ns), render_list(&ops, render_operator));
        ToolResult::ok(content, serde_json::json!({ "namespace": ns, "operators": ops }))
    }
}

/// T5.
pub struct PodSummaryTool {
    spec: ToolSpec,
}

impl PodSummaryTool {
    pub fn new() -> Self {
        PodSummaryTool {
            spec: namespace_spec(
                ToolId::T5,
                "Summarize_Pods_Information_In_OpenShift_Namespace",
                "Summarizes the pods of an OpenShift namespace: the number of pods per state (Running, Succeeded, Pending, Failed) and, for each running pod, its name and the services exposing it with their ports and routes.",
                "namespace, pod_counts and running_pods",
            ),
        }
    }
}

impl Default for PodSummaryTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for PodSummaryTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let ns = match namespace_arg(args) {
            Ok(ns) => ns,
            Err(e) => return e,
        };
        let sum = ctx.state.pod_summary(&ns);
        let structured = serde_json::to_value(&sum).expect("serializable");
        ToolResult::ok(render_pods(&sum), structured)
    }
}

/// T6.
pub struct ServiceSummaryTool {
    spec: ToolSpec,
}

impl ServiceSummaryTool {
    pub fn new() -> Self {
        ServiceSummaryTool {
            spec: namespace_spec(
                ToolId::T6,
                "Summarize_Services_Information_In_OpenShift_Namespace",
                "Summarizes the services of an OpenShift namespace: for each service its name, its ports (number, name, protocol) and its route if one is available.",
                "namespace and svc_summary",
            ),
        }
    }
}

impl Default for ServiceSummaryTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for ServiceSummaryTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let ns = match namespace_arg(args) {
            Ok(ns) => ns,
            Err(e) => return e,
        };
        let svcs = ctx.state.service_summary(&ns);
        let content = format!("namespace = {} svc_summary = {}", quoted(&ns), render_list(&svcs, render_service));
        ToolResult::ok(content, serde_json::json!({ "namespace": ns, "svc_summary": svcs }))
    }
}
