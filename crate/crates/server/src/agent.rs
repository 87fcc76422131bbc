//! Chat service: runs the agent per request and streams its trace.
//!
//! Each run owns an append-only event buffer. Stream readers replay the
//! buffer from the start and then follow it live, so a reconnecting client
//! sees every event again (it dedups by `seq`). `final` and `error` are
//! terminal.

use std::collections::{HashMap, VecDeque};
use std::convert::Infallible;
use std::sync::{Arc, LazyLock, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{watch, Semaphore};

use aiops_core::domain::{AgentEvent, AgentTrace, RunOutcome, TokenSource};
use aiops_core::llm::CompletionBackend;
use aiops_core::react::{memory_text, run_agent, AgentLimits, MemoryPolicy, Turn};
use aiops_core::tools::{ToolContext, ToolRegistry};
use aiops_core::SimState;

static ARTIFACT_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^FILE-[A-Za-z0-9_:.\-]+\.(png|svg|csv)$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Thought,
    Action,
    Observation,
    Final,
    Error,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Thought => "thought",
            EventKind::Action => "action",
            EventKind::Observation => "observation",
            EventKind::Final => "final",
            EventKind::Error => "error",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, EventKind::Final | EventKind::Error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    #[serde(skip)]
    pub kind: Option<EventKind>,
    pub payload: String,
    /// Action input, on `action` events only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outcome: RunOutcome,
    pub final_answer: Option<String>,
    pub trace: AgentTrace,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub token_source: Option<TokenSource>,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Default)]
struct TraceBuffer {
    events: Vec<StreamEvent>,
    summary: Option<RunSummary>,
}

/// One agent run and its event buffer.
#[derive(Debug)]
pub struct TraceRun {
    pub id: String,
    pub question: String,
    pub backend_id: String,
    pub session_id: String,
    buffer: Mutex<TraceBuffer>,
    len: watch::Sender<usize>,
}

impl TraceRun {
    fn new(id: String, question: String, backend_id: String, session_id: String) -> Self {
        TraceRun {
            id,
            question,
            backend_id,
            session_id,
            buffer: Mutex::new(TraceBuffer::default()),
            len: watch::channel(0).0,
        }
    }

    fn push(&self, kind: EventKind, payload: String, input: Option<String>) {
        let mut buf = self.buffer.lock().expect("trace buffer");
        if buf.events.last().and_then(|e| e.kind).is_some_and(EventKind::is_terminal) {
            return;
        }
        let seq = buf.events.len() as u64;
        buf.events.push(StreamEvent {
            seq,
            kind: Some(kind),
            payload,
            input,
        });
        self.len.send_replace(buf.events.len());
    }

    fn push_agent_event(&self, event: &AgentEvent) {
        match event {
            AgentEvent::Thought { text } => self.push(EventKind::Thought, text.clone(), None),
            AgentEvent::Action { action, input } => self.push(EventKind::Action, action.clone(), Some(input.clone())),
            AgentEvent::Observation { text } => self.push(EventKind::Observation, text.clone(), None),
            AgentEvent::FinalAnswer { text } => self.push(EventKind::Final, text.clone(), None),
        }
    }

    pub fn events(&self) -> Vec<StreamEvent> {
        self.buffer.lock().expect("trace buffer").events.clone()
    }

    pub fn is_done(&self) -> bool {
        self.buffer.lock().expect("trace buffer").summary.is_some()
    }

    pub fn summary(&self) -> Option<RunSummary> {
        self.buffer.lock().expect("trace buffer").summary.clone()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatSession {
    pub session_id: String,
    pub memory_policy: MemoryPolicy,
    pub created_at: f64,
    /// Every finished turn, kept for display even when memory is off.
    pub turns: Vec<Turn>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequest {
    pub question: String,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default)]
    pub backend: Option<String>,
    /// Memory switch for this session; the service default otherwise.
    #[serde(default)]
    pub memory: Option<bool>,
}

pub struct AgentService {
    base: SimState,
    registry: Arc<ToolRegistry>,
    backends: Vec<Arc<dyn CompletionBackend>>,
    limits: AgentLimits,
    memory: MemoryPolicy,
    seed: u64,
    max_runs: usize,
    permits: Arc<Semaphore>,
    max_stored: usize,
    traces: Mutex<(HashMap<String, Arc<TraceRun>>, VecDeque<String>)>,
    sessions: Mutex<HashMap<String, ChatSession>>,
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub limits: AgentLimits,
    pub memory: MemoryPolicy,
    pub seed: u64,
    pub max_concurrent_runs: usize,
    pub max_stored_traces: usize,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            limits: AgentLimits::default(),
            memory: MemoryPolicy::default(),
            seed: aiops_core::tools::DEFAULT_TOOL_SEED,
            max_concurrent_runs: 8,
            max_stored_traces: 1000,
        }
    }
}

fn now_s() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({"error": message.into()}))).into_response()
}

impl AgentService {
    pub fn new(
        base: SimState,
        registry: Arc<ToolRegistry>,
        backends: Vec<Arc<dyn CompletionBackend>>,
        options: ServiceOptions,
    ) -> Arc<Self> {
        assert!(!backends.is_empty(), "agent service needs at least one backend");
        let max_runs = options.max_concurrent_runs.max(1);
        Arc::new(AgentService {
            base,
            registry,
            backends,
            limits: options.limits,
            memory: options.memory,
            seed: options.seed,
            max_runs,
            permits: Arc::new(Semaphore::new(max_runs)),
            max_stored: options.max_stored_traces.max(1),
            traces: Mutex::new((HashMap::new(), VecDeque::new())),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn backend_ids(&self) -> Vec<&str> {
        self.backends.iter().map(|b| b.id()).collect()
    }

    pub fn trace(&self, id: &str) -> Option<Arc<TraceRun>> {
        self.traces.lock().expect("trace store").0.get(id).cloned()
    }

    pub fn session(&self, id: &str) -> Option<ChatSession> {
        self.sessions.lock().expect("sessions").get(id).cloned()
    }

    /// Waits until no run is active, or `timeout` elapses. Returns whether
    /// everything drained.
    pub async fn drain(&self, timeout: Duration) -> bool {
        let all = self.permits.acquire_many(self.max_runs as u32);
        matches!(tokio::time::timeout(timeout, all).await, Ok(Ok(_)))
    }

    fn store(&self, run: Arc<TraceRun>) {
        let mut guard = self.traces.lock().expect("trace store");
        let (map, order) = &mut *guard;
        order.push_back(run.id.clone());
        map.insert(run.id.clone(), run);
        // Drop the oldest finished traces beyond the cap.
        while map.len() > self.max_stored {
            let Some(pos) = order.iter().position(|id| map.get(id).is_some_and(|r| r.is_done())) else {
                break;
            };
            let id = order.remove(pos).expect("position is valid");
            map.remove(&id);
        }
    }

    /// Starts a run; returns the new trace.
    pub fn start_chat(self: &Arc<Self>, req: ChatRequest) -> Result<Arc<TraceRun>, Response> {
        let question = req.question.trim().to_string();
        if question.is_empty() {
            return Err(error(StatusCode::BAD_REQUEST, "question must not be empty"));
        }
        let backend = match &req.backend {
            None => self.backends[0].clone(),
            Some(id) => self
                .backends
                .iter()
                .find(|b| b.id() == id)
                .cloned()
                .ok_or_else(|| error(StatusCode::BAD_REQUEST, format!("unknown backend `{id}`")))?,
        };
        let permit = self
            .permits
            .clone()
            .try_acquire_owned()
            .map_err(|_| error(StatusCode::TOO_MANY_REQUESTS, "too many concurrent runs"))?;

        let (session_id, memory) = {
            let mut sessions = self.sessions.lock().expect("sessions");
            let id = req.session_id.clone().unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
            let session = sessions.entry(id.clone()).or_insert_with(|| ChatSession {
                session_id: id.clone(),
                memory_policy: self.memory,
                created_at: now_s(),
                turns: Vec::new(),
            });
            if let Some(on) = req.memory {
                session.memory_policy.enabled = on;
            }
            (id, memory_text(session.memory_policy, &session.turns))
        };

        let run = Arc::new(TraceRun::new(
            uuid::Uuid::new_v4().to_string(),
            question,
            backend.id().to_string(),
            session_id,
        ));
        self.store(run.clone());

        let service = self.clone();
        let worker = run.clone();
        tokio::task::spawn_blocking(move || {
            let _permit = permit;
            service.execute(&worker, backend.as_ref(), memory.as_deref());
        });
        Ok(run)
    }

    fn execute(&self, trace: &TraceRun, backend: &dyn CompletionBackend, memory: Option<&str>) {
        let state = self.base.fresh_run();
        let ctx = ToolContext::new(&state).with_seed(self.seed);
        let started = std::time::Instant::now();
        // The final event is published only after the summary is stored, so
        // a client that sees it can fetch the finished trace right away.
        let mut observer = |e: &AgentEvent| {
            if !matches!(e, AgentEvent::FinalAnswer { .. }) {
                trace.push_agent_event(e);
            }
        };
        let run = run_agent(backend, &self.registry, &ctx, &trace.question, &self.limits, memory, &mut observer);
        let summary = RunSummary {
            outcome: run.outcome,
            final_answer: run.final_answer.clone(),
            trace: run.trace.clone(),
            prompt_tokens: run.prompt_tokens,
            completion_tokens: run.completion_tokens,
            token_source: run.token_source,
            error: run.error.clone(),
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        if let Some(answer) = &run.final_answer {
            let mut sessions = self.sessions.lock().expect("sessions");
            if let Some(s) = sessions.get_mut(&trace.session_id) {
                s.turns.push(Turn {
                    question: trace.question.clone(),
                    final_answer: answer.clone(),
                });
            }
        }
        trace.buffer.lock().expect("trace buffer").summary = Some(summary);
        match (run.outcome, run.final_answer) {
            (RunOutcome::Finished, Some(answer)) => trace.push(EventKind::Final, answer, None),
            (outcome, _) => {
                let detail = run.error.unwrap_or_else(|| outcome.to_string());
                trace.push(EventKind::Error, format!("{outcome}: {detail}"), None);
            }
        }
    }
}

/// Replays `run` from `seq` 0 and follows it until a terminal event.
pub fn event_stream(run: Arc<TraceRun>) -> impl Stream<Item = StreamEvent> {
    let rx = run.len.subscribe();
    stream::unfold((run, rx, 0usize, false), |(run, mut rx, next, finished)| async move {
        if finished {
            return None;
        }
        loop {
            let batch: Vec<StreamEvent> = run.buffer.lock().expect("trace buffer").events[next..].to_vec();
            if !batch.is_empty() {
                let terminal = batch.iter().any(|e| e.kind.is_some_and(EventKind::is_terminal));
                let next = next + batch.len();
                return Some((stream::iter(batch), (run, rx, next, terminal)));
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    })
    .flatten()
}

fn sse_event(e: StreamEvent) -> Event {
    let kind = e.kind.map(EventKind::as_str).unwrap_or("message");
    Event::default()
        .event(kind)
        .data(serde_json::to_string(&e).expect("event serializes"))
}

pub type Shared = Arc<AgentService>;

/// Agent routes without `/healthz`.
pub fn agent_routes(service: Shared) -> Router {
    Router::new()
        .route("/v1/chat", post(post_chat))
        .route("/v1/traces/{id}", get(get_trace))
        .route("/v1/traces/{id}/events", get(stream_trace))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/tools", get(list_tools))
        .route("/v1/backends", get(list_backends))
        .route("/v1/artifacts/{*name}", get(get_artifact))
        .with_state(service)
}

async fn post_chat(State(service): State<Shared>, body: Bytes) -> Response {
    let req: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")),
    };
    match service.start_chat(req) {
        Ok(run) => Json(json!({
            "trace_id": run.id,
            "session_id": run.session_id,
            "backend": run.backend_id,
        }))
        .into_response(),
        Err(resp) => resp,
    }
}

async fn get_trace(State(service): State<Shared>, Path(id): Path<String>) -> Response {
    let Some(run) = service.trace(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown trace `{id}`"));
    };
    let summary = run.summary();
    Json(json!({
        "trace_id": run.id,
        "question": run.question,
        "backend": run.backend_id,
        "session_id": run.session_id,
        "status": if summary.is_some() { "done" } else { "running" },
        "events_emitted": run.events().len(),
        "result": summary,
    }))
    .into_response()
}

async fn stream_trace(State(service): State<Shared>, Path(id): Path<String>) -> Response {
    let Some(run) = service.trace(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown trace `{id}`"));
    };
    let events = event_stream(run).map(|e| Ok::<_, Infallible>(sse_event(e)));
    Sse::new(events).keep_alive(KeepAlive::default()).into_response()
}

async fn get_session(State(service): State<Shared>, Path(id): Path<String>) -> Response {
    match service.session(&id) {
        Some(s) => Json(s).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown session `{id}`")),
    }
}

async fn list_tools(State(service): State<Shared>) -> Response {
    let render = service.registry.render();
    Json(json!({
        "tools": service.registry.specs(),
        "tools_block": render.tools_block,
        "tool_names_block": render.tool_names_block,
    }))
    .into_response()
}

async fn list_backends(State(service): State<Shared>) -> Response {
    let ids = service.backend_ids();
    Json(json!({"default": ids[0], "backends": ids})).into_response()
}

/// Content type for an artifact name.
pub fn artifact_content_type(name: &str) -> &'static str {
    match name.rsplit('.').next() {
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        Some("csv") => "text/csv; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Accepts only flat names in the artifact grammar.
pub fn check_artifact_name(name: &str) -> Result<(), &'static str> {
    if name.is_empty() || name.contains(['/', '\\', '\0']) || name.split('.').any(|p| p.is_empty() && name.contains("..")) {
        return Err("artifact names are flat file names");
    }
    if !ARTIFACT_NAME.is_match(name) {
        return Err("not an artifact name");
    }
    Ok(())
}

async fn get_artifact(State(service): State<Shared>, Path(name): Path<String>) -> Response {
    if let Err(msg) = check_artifact_name(&name) {
        return error(StatusCode::BAD_REQUEST, msg);
    }
    let path = service.base.artifact_dir().join(&name);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, artifact_content_type(&name))], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, format!("no artifact `{name}`")),
    }
}
