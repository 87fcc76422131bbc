//! AIOps assistant stack: a ReAct agent engine with nine IT-operations tools,
//! a simulated Kubernetes-like cluster with a Prometheus-style metrics store,
//! a pluggable LLM boundary and a benchmark harness (accuracy, latency
//! percentiles, token cost).
//!
//! Module map:
//! - [`domain`], [`fixture`], [`suite`]: shared types, cluster fixtures, query suites
//! - [`sim`]: in-memory cluster state, time series, clock, irate
//! - [`tools`]: tools T1..T9 and the prompt-facing registry
//! - [`react`]: prompt assembly, step parsing, the agent loop
//! - [`llm`]: completion backends (scripted, HTTP) and token accounting
//! - [`eval`]: validators, benchmark runner, aggregation and reports

pub mod domain;
pub mod eval;
pub mod fixture;
pub mod llm;
pub mod react;
pub mod sim;
pub mod suite;
pub mod tools;

pub use domain::{
    AgentEvent, AgentTrace, Category, FailureKind, QueryCase, RunRecord, ToolId, ValidatorSpec,
};
pub use fixture::{load_fixture, ClusterFixture};
pub use sim::{Clock, SimState};
pub use suite::builtin_suite;
