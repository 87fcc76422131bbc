//! Prometheus-style and cluster-listing HTTP facade over a [`SimState`].

use std::sync::LazyLock;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use regex::Regex;
use serde_json::{json, Value};

use aiops_core::sim::SimError;
use aiops_core::SimState;

static MATCHER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*"([^"]*)"\s*\}$"#).unwrap());

/// Error body in the Prometheus shape.
pub fn bad_request(message: impl Into<String>) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({"status": "error", "errorType": "bad_data", "error": message.into()})),
    )
        .into_response()
}

/// Routes without `/healthz`, for merging into a larger app.
pub fn sim_routes(state: SimState) -> Router {
    Router::new()
        .route("/api/v1/label/__name__/values", get(label_values))
        .route("/api/v1/query_range", get(query_range))
        .route("/sim/v1/namespaces/{ns}/operators", get(operators))
        .route("/sim/v1/namespaces/{ns}/pods", get(pods))
        .route("/sim/v1/namespaces/{ns}/services", get(services))
        .with_state(state)
}

pub fn sim_router(state: SimState) -> Router {
    sim_routes(state).route("/healthz", get(healthz))
}

pub async fn healthz() -> &'static str {
    "ok"
}

/// Parses `{label="value"}`.
pub fn parse_matcher(m: &str) -> Option<(String, String)> {
    MATCHER.captures(m.trim()).map(|c| (c[1].to_string(), c[2].to_string()))
}

async fn label_values(State(state): State<SimState>, Query(params): Query<Vec<(String, String)>>) -> Response {
    let matchers: Vec<&String> = params.iter().filter(|(k, _)| k == "match[]").map(|(_, v)| v).collect();
    let names = match matchers.as_slice() {
        [] => state.all_metric_names(),
        [m] => match parse_matcher(m) {
            Some((label, value)) => state.metric_names(&label, &value),
            None => return bad_request(format!("unsupported matcher `{m}` (expected {{label=\"value\"}})")),
        },
        _ => return bad_request("at most one match[] is supported"),
    };
    Json(json!({"status": "success", "data": names})).into_response()
}

/// Prometheus renders sample values as strings.
pub fn sample_value(v: f64) -> String {
    v.to_string()
}

async fn query_range(State(state): State<SimState>, Query(params): Query<Vec<(String, String)>>) -> Response {
    let get = |k: &str| params.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let (Some(metric), Some(start), Some(end)) = (get("query"), get("start"), get("end")) else {
        return bad_request("query, start and end are required");
    };
    let (Ok(start), Ok(end)) = (start.parse::<f64>(), end.parse::<f64>()) else {
        return bad_request("start and end must be numeric timestamps");
    };
    match state.range_samples(metric, start, end) {
        Err(SimError::InvalidRange) => return bad_request("start must not exceed end"),
        Err(e) => return bad_request(e.to_string()),
        Ok(_) => {}
    }
    let result: Vec<Value> = state
        .series()
        .iter()
        .filter(|s| s.metric_name == metric)
        .filter_map(|s| {
            let values: Vec<Value> = aiops_core::sim::filter_range(&s.samples, start, end)
                .into_iter()
                .map(|(t, v)| json!([t, sample_value(v)]))
                .collect();
            if values.is_empty() {
                return None;
            }
            let mut labels = serde_json::Map::new();
            labels.insert("__name__".into(), json!(s.metric_name));
            for (k, v) in &s.labels {
                labels.insert(k.clone(), json!(v));
            }
            Some(json!({"metric": labels, "values": values}))
        })
        .collect();
    Json(json!({"status": "success", "data": {"resultType": "matrix", "result": result}})).into_response()
}

async fn operators(State(state): State<SimState>, Path(ns): Path<String>) -> Response {
    Json(state.list_operators(&ns)).into_response()
}

async fn pods(State(state): State<SimState>, Path(ns): Path<String>) -> Response {
    Json(state.pod_summary(&ns)).into_response()
}

async fn services(State(state): State<SimState>, Path(ns): Path<String>) -> Response {
    Json(state.service_summary(&ns)).into_response()
}
