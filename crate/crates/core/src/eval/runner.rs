//! The sweep: backends × queries × repetitions.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::validator::{resolve_suite, ResolvedValidator};
use super::EvalError;
use crate::domain::{QueryCase, RunRecord};
use crate::llm::CompletionBackend;
use crate::react::{run_agent, AgentLimits, Conversation, MemoryPolicy};
use crate::sim::SimState;
use crate::suite::validate_suite;
use crate::tools::{ToolContext, ToolRegistry, DEFAULT_TOOL_SEED};

#[derive(Clone)]
pub struct SuiteRunConfig {
    pub suite: Vec<QueryCase>,
    pub backends: Vec<Arc<dyn CompletionBackend>>,
    pub repetitions: u32,
    pub seed: u64,
    pub parallel_workers: usize,
    pub memory: MemoryPolicy,
    pub limits: AgentLimits,
}

impl std::fmt::Debug for SuiteRunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuiteRunConfig")
            .field("queries", &self.suite.len())
            .field("backends", &self.backends.iter().map(|b| b.id()).collect::<Vec<_>>())
            .field("repetitions", &self.repetitions)
            .field("seed", &self.seed)
            .field("parallel_workers", &self.parallel_workers)
            .field("memory", &self.memory)
            .finish()
    }
}

impl SuiteRunConfig {
    pub fn new(suite: Vec<QueryCase>, backends: Vec<Arc<dyn CompletionBackend>>) -> Self {
        SuiteRunConfig {
            suite,
            backends,
            repetitions: 10,
            seed: DEFAULT_TOOL_SEED,
            parallel_workers: 1,
            memory: MemoryPolicy::default(),
            limits: AgentLimits::default(),
        }
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let config = |m: &str| Err(EvalError::Config(m.to_string()));
        if self.repetitions == 0 {
            return config("repetitions must be at least 1");
        }
        if self.backends.is_empty() {
            return config("no backends configured");
        }
        if self.suite.is_empty() {
            return config("empty suite");
        }
        if self.parallel_workers == 0 {
            return config("parallel_workers must be at least 1");
        }
        let mut ids = HashSet::new();
        for b in &self.backends {
            if !ids.insert(b.id()) {
                return Err(EvalError::Config(format!("duplicate backend id `{}`", b.id())));
            }
        }
        self.limits.check().map_err(EvalError::Config)?;
        validate_suite(&self.suite).map_err(|e| EvalError::Config(e.to_string()))
    }
}

/// Executes and grades one repetition on a fresh copy of `state`.
#[allow(clippy::too_many_arguments)]
pub fn run_one(
    backend: &dyn CompletionBackend,
    registry: &ToolRegistry,
    state: &SimState,
    case: &QueryCase,
    validator: &ResolvedValidator,
    repetition: u32,
    seed: u64,
    limits: &AgentLimits,
    memory: Option<&str>,
) -> RunRecord {
    let fresh = state.fresh_run();
    let ctx = ToolContext::new(&fresh).with_seed(seed);
    let started = Instant::now();
    let run = run_agent(backend, registry, &ctx, &case.text, limits, memory, &mut |_| {});
    let wall_seconds = started.elapsed().as_secs_f64();
    let verdict = validator.validate(&run, fresh.artifact_dir());
    RunRecord {
        query_id: case.id.clone(),
        category: case.category,
        backend_id: backend.id().to_string(),
        repetition,
        wall_seconds,
        prompt_tokens: run.prompt_tokens,
        completion_tokens: run.completion_tokens,
        total_tokens: run.total_tokens(),
        token_source: run.token_source,
        success: verdict.success,
        failure_kind: verdict.failure_kind,
        expectation_met: verdict.expectation_met,
        outcome: run.outcome,
        final_answer: run.final_answer,
        trace: run.trace,
    }
}

pub fn run_benchmark(config: &SuiteRunConfig, registry: &ToolRegistry, state: &SimState) -> Result<Vec<RunRecord>, EvalError> {
    run_benchmark_with(config, registry, state, &|_| {})
}

/// Runs the sweep, calling `progress` after every record. Records come back
/// backend-major, then query, then repetition, whatever the worker count.
///
/// Work is split into cells: one per (backend, query) without memory, one
/// per backend with memory (the conversation has to see queries in order).
/// Repetitions inside a cell always run sequentially.
pub fn run_benchmark_with(
    config: &SuiteRunConfig,
    registry: &ToolRegistry,
    state: &SimState,
    progress: &(dyn Fn(&RunRecord) + Sync),
) -> Result<Vec<RunRecord>, EvalError> {
    config.check()?;
    let validators = resolve_suite(&config.suite, registry, state)?;
    let nq = config.suite.len();
    let cells: Vec<(usize, std::ops::Range<usize>)> = if config.memory.enabled {
        (0..config.backends.len()).map(|b| (b, 0..nq)).collect()
    } else {
        (0..config.backends.len())
            .flat_map(|b| (0..nq).map(move |q| (b, q..q + 1)))
            .collect()
    };

    let run_cell = |(b, queries): &(usize, std::ops::Range<usize>)| -> Vec<RunRecord> {
        let backend = config.backends[*b].as_ref();
        let mut conversation = Conversation::new(config.memory);
        let mut out = Vec::new();
        for q in queries.clone() {
            let case = &config.suite[q];
            for rep in 1..=config.repetitions {
                let memory = conversation.memory_text();
                let record = run_one(
                    backend,
                    registry,
                    state,
                    case,
                    &validators[q],
                    rep,
                    config.seed,
                    &config.limits,
                    memory.as_deref(),
                );
                if let Some(answer) = &record.final_answer {
                    conversation.remember(&case.text, answer);
                }
                progress(&record);
                out.push(record);
            }
        }
        out
    };

    let workers = config.parallel_workers.min(cells.len());
    if workers <= 1 {
        return Ok(cells.iter().flat_map(run_cell).collect());
    }
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(usize, Vec<RunRecord>)>> = Mutex::new(Vec::with_capacity(cells.len()));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else { break };
                let records = run_cell(cell);
                done.lock().expect("record sink").push((i, records));
            });
        }
    });
    let mut done = done.into_inner().expect("record sink");
    done.sort_by_key(|(i, _)| *i);
    Ok(done.into_iter().flat_map(|(_, r)| r).collect())
}
