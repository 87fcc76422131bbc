//! T7–T9: Prometheus-style metric discovery, range queries and irate plots.

use std::fmt::Write as _;

use super::{plot, quoted, Tool, ToolArgs, ToolContext, ToolResult};
use crate::domain::{FieldKind, InputField, ToolId, ToolSpec};
use crate::sim::{irate_points, PlotFormat, RangeStatus};

fn valid_metric_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':')
}

/// `FILE-plot-<metric>-<floor(start)>-<floor(end)>.<ext>`.
pub fn plot_file_name(metric: &str, start: f64, end: f64, format: PlotFormat) -> Result<String, String> {
    if !valid_metric_name(metric) {
        return Err(format!("invalid metric name `{metric}`"));
    }
    if !(start >= 0.0 && end >= 0.0) {
        return Err("timestamps must be nonnegative".into());
    }
    if start > end {
        return Err("start must not exceed end".into());
    }
    Ok(format!(
        "FILE-plot-{metric}-{}-{}.{}",
        start.floor() as u64,
        end.floor() as u64,
        format.extension()
    ))
}

/// `timestamp,value` CSV with floored timestamps and shortest round-trip
/// values, LF-separated, no trailing newline.
pub fn metric_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("timestamp,value");
    for &(t, v) in samples {
        let _ = write!(out, "\n{},{}", t.floor() as i64, v);
    }
    out
}

fn render_samples(samples: &[(f64, f64)]) -> String {
    let parts: Vec<String> = samples.iter().map(|(t, v)| format!("({t}, {v})")).collect();
    format!("[{}]", parts.join(", "))
}

fn prom_fields(required: bool) -> Vec<InputField> {
    let make = if required { InputField::required } else { InputField::optional };
    vec![
        make("prom_service", FieldKind::String),
        make("prom_namespace", FieldKind::String),
        make("prom_port", FieldKind::Integer),
    ]
}

fn range_fields() -> Vec<InputField> {
    let mut fields = prom_fields(true);
    fields.extend([
        InputField::required("metric_name", FieldKind::String),
        InputField::required("metric_range_start", FieldKind::Number),
        InputField::required("metric_range_end", FieldKind::Number),
    ]);
    fields
}

/// Checks that the named Prometheus service exposes the port.
fn check_service(ctx: &ToolContext<'_>, service: &str, namespace: &str, port: i64) -> Result<(), ToolResult> {
    let ok = u32::try_from(port)
        .map(|p| ctx.state.service_exposes(namespace, service, p))
        .unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(ToolResult::error(format!(
            "no service `{service}` exposing port {port} in namespace `{namespace}`"
        )))
    }
}

struct RangeQuery {
    metric: String,
    start: f64,
    end: f64,
}

fn range_query(args: &ToolArgs, ctx: &ToolContext<'_>) -> Result<RangeQuery, ToolResult> {
    let err = |e: super::ArgError| ToolResult::error(e.to_string());
    let service = args.req_str("prom_service").map_err(err)?;
    let namespace = args.req_str("prom_namespace").map_err(err)?;
    let port = args.req_integer("prom_port").map_err(err)?;
    let metric = args.req_str("metric_name").map_err(err)?;
    let start = args.req_number("metric_range_start").map_err(err)?;
    let end = args.req_number("metric_range_end").map_err(err)?;
    if !valid_metric_name(&metric) {
        return Err(ToolResult::error(format!("invalid metric name `{metric}`")));
    }
    if start < 0.0 || end < 0.0 {
        return Err(ToolResult::error("timestamps must be nonnegative"));
    }
    if start > end {
        return Err(ToolResult::error("start must not exceed end"));
    }
    check_service(ctx, &service, &namespace, port)?;
    Ok(RangeQuery { metric, start, end })
}

fn fetch(q: &RangeQuery, ctx: &ToolContext<'_>) -> Result<Vec<(f64, f64)>, ToolResult> {
    let res = ctx
        .state
        .range_samples(&q.metric, q.start, q.end)
        .map_err(|e| ToolResult::error(e.to_string()))?;
    match res.status {
        RangeStatus::Ok => Ok(res.samples),
        RangeStatus::NoSamplesInRange => Err(ToolResult::error("no data in range")),
        RangeStatus::NoSuchMetric => Err(ToolResult::error(format!("metric `{}` not found", q.metric))),
    }
}

/// T7.
pub struct MetricNamesTool {
    spec: ToolSpec,
}

impl MetricNamesTool {
    pub fn new() -> Self {
        let mut inputs = vec![
            InputField::required("filter_name", FieldKind::String),
            InputField::required("filter_value", FieldKind::String),
        ];
        inputs.extend(prom_fields(false));
        MetricNamesTool {
            spec: ToolSpec {
                tool_id: ToolId::T7,
                action_name: "List_Prometheus_Metrics_Names_Using_A_Filter".into(),
                description: "Lists the names of the Prometheus metrics whose label filter_name equals filter_value (for example filter_name \"namespace\" and filter_value \"demo\"). The Prometheus service, namespace and port may be given to address the Prometheus instance.".into(),
                inputs,
                output_doc: "metric_names list".into(),
            },
        }
    }
}

impl Default for MetricNamesTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for MetricNamesTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let (name, value) = match (args.req_str("filter_name"), args.req_str("filter_value")) {
            (Ok(n), Ok(v)) => (n, v),
            (Err(e), _) | (_, Err(e)) => return ToolResult::error(e.to_string()),
        };
        if let Ok(Some(service)) = args.str("prom_service") {
            let namespace = match args.str("prom_namespace") {
                Ok(Some(ns)) => ns,
                _ if name == "namespace" => value.clone(),
                _ => return ToolResult::error("prom_namespace is required when prom_service is given"),
            };
            let port = match args.integer("prom_port") {
                Ok(Some(p)) => p,
                Ok(None) => return ToolResult::error("prom_port is required when prom_service is given"),
                Err(e) => return ToolResult::error(e.to_string()),
            };
            if let Err(e) = check_service(ctx, &service, &namespace, port) {
                return e;
            }
        }
        let names = ctx.state.metric_names(&name, &value);
        let listed: Vec<String> = names.iter().map(|n| quoted(n)).collect();
        ToolResult::ok(
            format!("metric_names = [{}]", listed.join(", ")),
            serde_json::json!({ "metric_names": names }),
        )
    }
}

/// T8. Returns raw samples, or a `timestamp,value` CSV table with
/// `"format": "csv"`.
pub struct MetricRangeTool {
    spec: ToolSpec,
}

impl MetricRangeTool {
    pub fn new() -> Self {
        let mut inputs = range_fields();
        inputs.push(InputField::optional("format", FieldKind::String));
        MetricRangeTool {
            spec: ToolSpec {
                tool_id: ToolId::T8,
                action_name: "List_metric_values_between_a_timestamp_range".into(),
                description: "Lists the values of a Prometheus metric between two timestamps (inclusive), using the Prometheus service name, namespace and port. Set format to \"csv\" to get a CSV table with the columns timestamp and value instead of the raw samples.".into(),
                inputs,
                output_doc: "metric_name and samples, or a timestamp,value CSV table".into(),
            },
        }
    }
}

impl Default for MetricRangeTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for MetricRangeTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let csv = match args.str("format") {
            Ok(None) => false,
            Ok(Some(f)) if f.eq_ignore_ascii_case("samples") => false,
            Ok(Some(f)) if f.eq_ignore_ascii_case("csv") => true,
            Ok(Some(f)) => return ToolResult::error(format!("unknown format `{f}` (expected samples or csv)")),
            Err(e) => return ToolResult::error(e.to_string()),
        };
        let samples = match range_query(args, ctx).and_then(|q| fetch(&q, ctx).map(|s| (q, s))) {
            Ok(x) => x,
            Err(e) => return e,
        };
        let (q, samples) = samples;
        let structured = serde_json::json!({ "metric_name": q.metric, "samples": samples });
        if csv {
            ToolResult::ok(metric_csv(&samples), structured)
        } else {
            ToolResult::ok(
                format!("metric_name = {} samples = {}", quoted(&q.metric), render_samples(&samples)),
                structured,
            )
        }
    }
}

/// T9.
pub struct PlotIrateTool {
    spec: ToolSpec,
}

impl PlotIrateTool {
    pub fn new() -> Self {
        PlotIrateTool {
            spec: ToolSpec {
                tool_id: ToolId::T9,
                action_name: "File_create_plot_irate".into(),
                description: "Creates a file with the plot of the instantaneous rate (irate) of a Prometheus metric between two timestamps, using the Prometheus service name, namespace and port. Returns the name of the created file.".into(),
                inputs: range_fields(),
                output_doc: "file_name".into(),
            },
        }
    }
}

impl Default for PlotIrateTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for PlotIrateTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let (q, samples) = match range_query(args, ctx).and_then(|q| fetch(&q, ctx).map(|s| (q, s))) {
            Ok(x) => x,
            Err(e) => return e,
        };
        if samples.len() < 2 {
            return ToolResult::error("irate needs at least two samples in range");
        }
        let points = match irate_points(&samples) {
            Ok(p) => p,
            Err(e) => return ToolResult::error(e.to_string()),
        };
        let format = ctx.state.plot_format();
        let name = match plot_file_name(&q.metric, q.start, q.end, format) {
            Ok(n) => n,
            Err(e) => return ToolResult::error(e),
        };
        let bytes = plot::render(&points, &format!("irate({})", q.metric), format);
        if let Err(e) = plot::write_atomic(ctx.state.artifact_dir(), &name, &bytes) {
            return ToolResult::error(format!("could not write plot file: {e}"));
        }
        let mut r = ToolResult::ok(
            format!("file_name={}", quoted(&name)),
            serde_json::json!({ "file_name": name, "points": points.len() }),
        );
        r.artifacts.push(name);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{load_fixture, ClusterFixture};
    use crate::sim::SimState;

    const TRACE_ARGS: &str = r#"{"prom_service": "prometheus-operated", "prom_namespace": "demo", "prom_port": 9090, "metric_name": "load_generator_total_msg", "metric_range_start": 1730327770.333979, "metric_range_end": 1730500568.411993}"#;

    fn call(tool: &dyn Tool, state: &SimState, input: &str) -> ToolResult {
        match ToolArgs::parse(input, tool.spec()) {
            Ok(a) => tool.call(&a, &ToolContext::new(state)),
            Err(e) => ToolResult::error(e.to_string()),
        }
    }

    #[test]
    fn plot_matches_trace_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let state = SimState::new(ClusterFixture::demo(), dir.path());
        let r = call(&PlotIrateTool::new(), &state, TRACE_ARGS);
        assert_eq!(r.content, "file_name='FILE-plot-load_generator_total_msg-1730327770-1730500568.png'");
        assert_eq!(r.artifacts, vec!["FILE-plot-load_generator_total_msg-1730327770-1730500568.png"]);
        let bytes = std::fs::read(dir.path().join(&r.artifacts[0])).unwrap();
        assert!(image::load_from_memory(&bytes).is_ok());
    }

    #[test]
    fn svg_keeps_the_stem() {
        let dir = tempfile::tempdir().unwrap();
        let state = SimState::new(ClusterFixture::demo(), dir.path()).with_plot_format(PlotFormat::Svg);
        let r = call(&PlotIrateTool::new(), &state, TRACE_ARGS);
        assert_eq!(r.artifacts, vec!["FILE-plot-load_generator_total_msg-1730327770-1730500568.svg"]);
    }

    #[test]
    fn file_name_rules() {
        assert!(plot_file_name("a b", 0.0, 1.0, PlotFormat::Png).is_err());
        assert!(plot_file_name("m", -1.0, 1.0, PlotFormat::Png).is_err());
        assert!(plot_file_name("m", 2.0, 1.0, PlotFormat::Png).is_err());
        assert_eq!(plot_file_name("a:b_c", 1.9, 1.95, PlotFormat::Svg).unwrap(), "FILE-plot-a:b_c-1-1.svg");
    }

    #[test]
    fn csv_rendering() {
        assert_eq!(metric_csv(&[(10.2, 5.0), (20.9, 6.5)]), "timestamp,value\n10,5\n20,6.5");
        let many: Vec<(f64, f64)> = (0..1000).map(|i| (i as f64, i as f64 * 0.5)).collect();
        assert_eq!(metric_csv(&many).lines().count(), 1001);
    }

    fn small_state(dir: &std::path::Path) -> SimState {
        let src = r#"
namespaces:
  - name: a
    services:
      - { name: prom, ports: [{port: 9090, name: web}] }
    metrics:
      - { metric_name: one, samples: [[10, 1]] }
      - { metric_name: two, samples: [[10, 1], [20, 5]] }
"#;
        SimState::new(load_fixture(src).unwrap(), dir)
    }

    fn range_args(metric: &str, start: f64, end: f64) -> String {
        format!(
            r#"{{"prom_service": "prom", "prom_namespace": "a", "prom_port": 9090, "metric_name": "{metric}", "metric_range_start": {start}, "metric_range_end": {end}}}"#
        )
    }

    #[test]
    fn plot_error_observations() {
        let dir = tempfile::tempdir().unwrap();
        let s = small_state(dir.path());
        let tool = PlotIrateTool::new();
        let r = call(&tool, &s, &range_args("one", 0.0, 100.0));
        assert!(r.is_error && r.content.contains("at least two samples"));
        let r = call(&tool, &s, &range_args("two", 30.0, 40.0));
        assert_eq!(r.content, "Error: no data in range");
        let r = call(&tool, &s, &range_args("two", 40.0, 30.0));
        assert_eq!(r.content, "Error: start must not exceed end");
        let r = call(&tool, &s, &range_args("two", 0.0, 100.0));
        assert_eq!(r.content, "file_name='FILE-plot-two-0-100.png'");
        let bad_port = range_args("two", 0.0, 100.0).replace("9090", "9091");
        assert!(call(&tool, &s, &bad_port).content.contains("no service `prom`"));
    }

    #[test]
    fn range_samples_and_csv_modes() {
        let dir = tempfile::tempdir().unwrap();
        let s = small_state(dir.path());
        let tool = MetricRangeTool::new();
        let r = call(&tool, &s, &range_args("two", 0.0, 100.0));
        assert_eq!(r.content, "metric_name = 'two' samples = [(10, 1), (20, 5)]");
        let csv = range_args("two", 0.0, 100.0).replace('}', r#", "format": "csv"}"#);
        assert_eq!(call(&tool, &s, &csv).content, "timestamp,value\n10,1\n20,5");
        assert_eq!(call(&tool, &s, &range_args("two", 5.0, 1.0)).content, "Error: start must not exceed end");
        assert_eq!(call(&tool, &s, &range_args("two", 50.0, 60.0)).content, "Error: no data in range");
        assert!(call(&tool, &s, &range_args("zzz", 0.0, 1.0)).content.contains("not found"));
    }

    #[test]
    fn metric_names_listing() {
        let state = SimState::new(ClusterFixture::demo(), std::env::temp_dir());
        let tool = MetricNamesTool::new();
        let r = call(&tool, &state, r#"{"filter_name": "namespace", "filter_value": "demo"}"#);
        assert!(r.content.starts_with("metric_names = ["));
        assert!(r.content.contains("'load_generator_total_msg'"));
        let r = call(
            &tool,
            &state,
            r#"{"filter_name": "namespace", "filter_value": "demo", "prom_service": "prometheus-operated", "prom_port": 9090}"#,
        );
        assert!(!r.is_error);
        let r = call(
            &tool,
            &state,
            r#"{"filter_name": "namespace", "filter_value": "demo", "prom_service": "influxdb", "prom_port": 9090}"#,
        );
        assert!(r.is_error);
        let r = call(&tool, &state, r#"{"filter_name": "namespace", "filter_value": "empty-ns"}"#);
        assert_eq!(r.content, "metric_names = []");
    }
}
