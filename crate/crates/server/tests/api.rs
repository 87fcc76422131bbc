use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use aiops_core::domain::AgentEvent;
use aiops_server::{build, ServiceConfig};

const Q24: &str = "Find out the Prometheus service name and port number running in namespace demo. Use it to to plot all the prometheus metric data for the metric load_generator_total_msg starting 48 hours ago until now. Return only the content string of the tool and nothing else.";
const Q24_FILE: &str = "FILE-plot-load_generator_total_msg-1730327770-1730500568.png";

fn config(dir: &Path, extra: &str) -> ServiceConfig {
    let clock = if extra.contains("clock:") { "" } else { "clock: fixed:1730500568.411993\n" };
    let yaml = format!("artifact_dir: {}\n{clock}{extra}", dir.display());
    ServiceConfig::from_yaml(&yaml).unwrap()
}

fn app(dir: &Path, extra: &str) -> Router {
    build(&config(dir, extra)).unwrap().1
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, ctype, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, _, body) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

async fn post_chat(app: &Router, body: Value) -> (StatusCode, Value) {
    let req = Request::post("/v1/chat")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, _, body) = send(app, req).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

/// `(event, data)` pairs from a finished SSE stream.
async fn events(app: &Router, trace_id: &str) -> Vec<(String, Value)> {
    let uri = format!("/v1/traces/{trace_id}/events");
    let (status, ctype, body) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(ctype.starts_with("text/event-stream"), "{ctype}");
    let text = String::from_utf8(body).unwrap();
    text.split("\n\n")
        .filter(|block| block.lines().any(|l| l.starts_with("event:")))
        .map(|block| {
            let field = |name: &str| {
                block
                    .lines()
                    .find_map(|l| l.strip_prefix(name))
                    .map(|v| v.trim_start().to_string())
                    .unwrap()
            };
            (field("event:"), serde_json::from_str(&field("data:")).unwrap())
        })
        .collect()
}

async fn chat_to_end(app: &Router, body: Value) -> (Value, Vec<(String, Value)>) {
    let (status, started) = post_chat(app, body).await;
    assert_eq!(status, StatusCode::OK, "{started}");
    let evs = events(app, started["trace_id"].as_str().unwrap()).await;
    (started, evs)
}

#[tokio::test]
async fn health_tools_and_backends() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), "backends: ['scripted:golden', 'scripted:fault:deflect']\n");
    let (status, _, body) = send(&app, Request::get("/healthz").body(Body::empty()).unwrap()).await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"ok".as_slice()));
    let (_, tools) = get(&app, "/v1/tools").await;
    assert_eq!(tools["tools"].as_array().unwrap().len(), 9);
    assert!(tools["tool_names_block"].as_str().unwrap().contains("File_create_plot_irate"));
    let (_, b) = get(&app, "/v1/backends").await;
    assert_eq!(b, json!({"default": "scripted:golden", "backends": ["scripted:golden", "scripted:fault:deflect"]}));
}

#[tokio::test]
async fn q24_streams_and_matches_stored_trace() {
    let dir = tempfile::tempdir().unwrap();
    // Two clock readings: "now" for the start offset, then again for "until now".
    let app = app(dir.path(), "clock: 'replay:1730500568.411993,1730500570.333979'\n");
    let (started, evs) = chat_to_end(&app, json!({"question": Q24})).await;

    let kinds: Vec<&str> = evs.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(kinds.last(), Some(&"final"));
    let seqs: Vec<u64> = evs.iter().map(|(_, d)| d["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (0..evs.len() as u64).collect::<Vec<_>>());
    assert_eq!(evs.last().unwrap().1["payload"], Q24_FILE);
    let actions: Vec<&str> = evs
        .iter()
        .filter(|(k, _)| k == "action")
        .map(|(_, d)| d["payload"].as_str().unwrap())
        .collect();
    assert_eq!(
        actions,
        [
            "Summarize_Services_Information_In_OpenShift_Namespace",
            "Get_timestamp_and_time_ISO",
            "Get_timestamp_and_time_ISO",
            "File_create_plot_irate",
        ]
    );
    assert!(evs.iter().filter(|(k, _)| k == "action").all(|(_, d)| d["input"].is_string()));

    // The stream and the stored trace describe the same run.
    let (status, stored) = get(&app, &format!("/v1/traces/{}", started["trace_id"].as_str().unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stored["status"], "done");
    let trace: Vec<AgentEvent> = serde_json::from_value(stored["result"]["trace"].clone()).unwrap();
    assert_eq!(trace.len(), evs.len());
    for (event, (kind, data)) in trace.iter().zip(&evs) {
        let rebuilt = match kind.as_str() {
            "thought" => AgentEvent::Thought { text: data["payload"].as_str().unwrap().into() },
            "action" => AgentEvent::Action {
                action: data["payload"].as_str().unwrap().into(),
                input: data["input"].as_str().unwrap().into(),
            },
            "observation" => AgentEvent::Observation { text: data["payload"].as_str().unwrap().into() },
            "final" => AgentEvent::FinalAnswer { text: data["payload"].as_str().unwrap().into() },
            other => panic!("unexpected event {other}"),
        };
        assert_eq!(&rebuilt, event);
    }

    // A second subscriber replays the same events.
    let again = events(&app, started["trace_id"].as_str().unwrap()).await;
    assert_eq!(again, evs);

    // The artifact it names is served.
    let (status, ctype, body) = send(
        &app,
        Request::get(format!("/v1/artifacts/{Q24_FILE}")).body(Body::empty()).unwrap(),
    )
    .await;
    assert_eq!((status, ctype.as_str()), (StatusCode::OK, "image/png"));
    assert_eq!(&body[..8], b"\x89PNG\r\n\x1a\n");
}

#[tokio::test]
async fn faulty_run_ends_with_error_event() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), "backends: ['scripted:golden', 'scripted:fault:truncate']\n");
    let (_, evs) = chat_to_end(&app, json!({"question": Q24, "backend": "scripted:fault:truncate"})).await;
    let (kind, data) = evs.last().unwrap();
    assert_eq!(kind, "error");
    assert!(data["payload"].as_str().unwrap().starts_with("truncated"), "{data}");
}

#[tokio::test]
async fn bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), "");
    assert_eq!(post_chat(&app, json!({"question": "  "})).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post_chat(&app, json!({"question": "hi", "backend": "nope"})).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post_chat(&app, json!({"q": "hi"})).await.0, StatusCode::BAD_REQUEST);
    let req = Request::post("/v1/chat").body(Body::from("{not json")).unwrap();
    assert_eq!(send(&app, req).await.0, StatusCode::BAD_REQUEST);

    assert_eq!(get(&app, "/v1/traces/missing").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/v1/traces/missing/events").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/v1/sessions/missing").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn artifact_names_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().parent().unwrap().join("secrets"), "x").ok();
    let app = app(dir.path(), "");
    for uri in [
        "/v1/artifacts/../secrets",
        "/v1/artifacts/..%2Fsecrets",
        "/v1/artifacts/FILE-a%2F..%2Fb.png",
        "/v1/artifacts/notes.txt",
        "/v1/artifacts/FILE-x.exe",
    ] {
        assert_eq!(get(&app, uri).await.0, StatusCode::BAD_REQUEST, "{uri}");
    }
    assert_eq!(get(&app, "/v1/artifacts/FILE-plot-none-1-2.png").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrency_cap_answers_429() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), "max_concurrent_runs: 1\nlimits: {wall_timeout_s: 1.0}\nbackends: ['scripted:stall:1500']\n");
    let (first, started) = post_chat(&app, json!({"question": Q24})).await;
    assert_eq!(first, StatusCode::OK);
    assert_eq!(post_chat(&app, json!({"question": Q24})).await.0, StatusCode::TOO_MANY_REQUESTS);
    // Once the run ends the slot frees up.
    events(&app, started["trace_id"].as_str().unwrap()).await;
    tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    assert_eq!(post_chat(&app, json!({"question": "Is there a river?"})).await.0, StatusCode::OK);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), "memory: {enabled: true}\n");

    let (a, _) = chat_to_end(&app, json!({"question": "Can you describe Paris in 100 words or less?", "session_id": "a"})).await;
    assert_eq!(a["session_id"], "a");
    let (_, with_memory) = chat_to_end(&app, json!({"question": "Is there a river?", "session_id": "a"})).await;
    let (_, fresh) = chat_to_end(&app, json!({"question": "Is there a river?", "session_id": "b"})).await;
    let answer = |evs: &[(String, Value)]| evs.last().unwrap().1["payload"].as_str().unwrap().to_string();
    assert!(answer(&with_memory).contains("Seine"), "{}", answer(&with_memory));
    assert!(!answer(&fresh).contains("Seine"), "{}", answer(&fresh));

    let (_, sa) = get(&app, "/v1/sessions/a").await;
    let (_, sb) = get(&app, "/v1/sessions/b").await;
    assert_eq!(sa["turns"].as_array().unwrap().len(), 2);
    assert_eq!(sb["turns"].as_array().unwrap().len(), 1);

    // Memory off for a session means no carry-over even with turns recorded.
    chat_to_end(&app, json!({"question": "Can you describe Paris in 100 words or less?", "session_id": "c", "memory": false})).await;
    let (_, off) = chat_to_end(&app, json!({"question": "Is there a river?", "session_id": "c"})).await;
    assert!(!answer(&off).contains("Seine"));
}

#[tokio::test]
async fn sim_facade_agrees_with_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let state = cfg.build_state().unwrap();
    let app = build(&cfg).unwrap().1;

    let (status, names) = get(&app, "/api/v1/label/__name__/values?match[]=%7Bnamespace%3D%22demo%22%7D").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(names["data"], json!(state.metric_names("namespace", "demo")));
    assert_eq!(get(&app, "/api/v1/label/__name__/values?match[]=demo").await.0, StatusCode::BAD_REQUEST);

    let (start, end) = (1730327770.0, 1730500568.0);
    let (status, body) = get(
        &app,
        &format!("/api/v1/query_range?query=load_generator_total_msg&start={start}&end={end}&step=60"),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let mut served: Vec<(f64, f64)> = body["data"]["result"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["values"].as_array().unwrap().clone())
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_str().unwrap().parse().unwrap()))
        .collect();
    served.sort_by(|a, b| a.0.total_cmp(&b.0));
    let expected = state.range_samples("load_generator_total_msg", start, end).unwrap().samples;
    assert!(!expected.is_empty());
    assert_eq!(served, expected);
    assert_eq!(
        get(&app, &format!("/api/v1/query_range?query=x&start={end}&end={start}")).await.0,
        StatusCode::BAD_REQUEST
    );

    let (_, pods) = get(&app, "/sim/v1/namespaces/demo/pods").await;
    assert_eq!(pods, serde_json::to_value(state.pod_summary("demo")).unwrap());
    let (_, services) = get(&app, "/sim/v1/namespaces/demo/services").await;
    assert_eq!(services, serde_json::to_value(state.service_summary("demo")).unwrap());
    let (_, ops) = get(&app, "/sim/v1/namespaces/demo/operators").await;
    assert_eq!(ops, serde_json::to_value(state.list_operators("demo")).unwrap());
}
