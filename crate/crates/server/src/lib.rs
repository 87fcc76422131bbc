//! HTTP service: the chat/agent API plus the Prometheus-style facade over
//! the simulated cluster.

pub mod agent;
pub mod config;
pub mod sim_api;

use std::sync::Arc;

use axum::routing::get;
use axum::Router;

pub use agent::{AgentService, ServiceOptions};
pub use config::{ConfigError, ServiceConfig};

/// The full application router.
pub fn app(service: Arc<AgentService>, sim: aiops_core::SimState) -> Router {
    Router::new()
        .route("/healthz", get(sim_api::healthz))
        .merge(sim_api::sim_routes(sim))
        .merge(agent::agent_routes(service))
}

/// Builds the service and its router from a configuration.
pub fn build(config: &ServiceConfig) -> Result<(Arc<AgentService>, Router), ConfigError> {
    config.check()?;
    let state = config.build_state()?;
    let backends = config.build_backends()?;
    let registry = Arc::new(aiops_core::tools::ToolRegistry::standard());
    let service = AgentService::new(
        state.clone(),
        registry,
        backends,
        ServiceOptions {
            limits: config.limits.clone(),
            memory: config.memory,
            seed: config.seed,
            max_concurrent_runs: config.max_concurrent_runs,
            max_stored_traces: config.max_stored_traces,
        },
    );
    let router = app(service.clone(), state);
    Ok((service, router))
}
