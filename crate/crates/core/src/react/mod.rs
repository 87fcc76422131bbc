//! The ReAct loop: build the prompt, ask the backend, parse the step, run
//! the tool, append the observation, repeat until a final answer or a limit.

mod parse;
mod prompt;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use parse::{parse_step, render_scratchpad, strip_thought_label, ParsedStep, EMPTY_ACTION, MISSING_INPUT, NO_MARKER};
pub use prompt::{build_prompt, split_at_begin, REACT_TEMPLATE};

use crate::domain::{AgentEvent, AgentTrace, RunOutcome, TokenSource};
use crate::llm::{trim_at_stop, BackendError, CompletionBackend, CompletionRequest, OBSERVATION_STOP};
use crate::tools::{ToolContext, ToolRegistry};

pub const CORRECTIVE_OBSERVATION: &str =
    "invalid format; follow the Thought/Action/Action Input format or give a Final Answer.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentLimits {
    pub max_iterations: usize,
    pub max_output_chars: usize,
    pub wall_timeout_s: f64,
    pub malformed_retry_budget: usize,
}

impl Default for AgentLimits {
    fn default() -> Self {
        AgentLimits {
            max_iterations: 15,
            max_output_chars: 32768,
            wall_timeout_s: 180.0,
            malformed_retry_budget: 1,
        }
    }
}

impl AgentLimits {
    pub fn check(&self) -> Result<(), String> {
        if self.max_iterations == 0 || self.max_output_chars == 0 || !(self.wall_timeout_s > 0.0) {
            return Err("agent limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryPolicy {
    pub enabled: bool,
    pub max_turns: usize,
}

impl Default for MemoryPolicy {
    fn default() -> Self {
        MemoryPolicy {
            enabled: false,
            max_turns: 10,
        }
    }
}

impl MemoryPolicy {
    pub fn on() -> Self {
        MemoryPolicy {
            enabled: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub question: String,
    pub final_answer: String,
}

/// Prior turns rendered for the prompt, or `None` when memory is off.
pub fn memory_text(policy: MemoryPolicy, turns: &[Turn]) -> Option<String> {
    if !policy.enabled || turns.is_empty() || policy.max_turns == 0 {
        return None;
    }
    let skip = turns.len().saturating_sub(policy.max_turns);
    let parts: Vec<String> = turns[skip..]
        .iter()
        .map(|t| format!("Question: {}\nFinal Answer: {}", t.question, t.final_answer))
        .collect();
    Some(parts.join("\n"))
}

/// A chat session: remembers finished turns according to its policy.
#[derive(Debug, Clone, Default)]
pub struct Conversation {
    pub policy: MemoryPolicy,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(policy: MemoryPolicy) -> Self {
        Conversation {
            policy,
            turns: Vec::new(),
        }
    }

    pub fn memory_text(&self) -> Option<String> {
        memory_text(self.policy, &self.turns)
    }

    pub fn record(&mut self, question: &str, run: &AgentRun) {
        if let Some(answer) = &run.final_answer {
            self.remember(question, answer);
        }
    }

    pub fn remember(&mut self, question: &str, answer: &str) {
        if !self.policy.enabled {
            return;
        }
        self.turns.push(Turn {
            question: question.to_string(),
            final_answer: answer.to_string(),
        });
        let excess = self.turns.len().saturating_sub(self.policy.max_turns);
        self.turns.drain(..excess);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub final_answer: Option<String>,
    pub trace: AgentTrace,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub token_source: Option<TokenSource>,
    pub outcome: RunOutcome,
    pub error: Option<String>,
    /// Prompts sent, one per backend call.
    #[serde(skip)]
    pub prompts: Vec<String>,
}

impl AgentRun {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Runs one question to completion. Every event is reported to `observer`
/// as soon as it is appended to the trace.
pub fn run_agent(
    backend: &dyn CompletionBackend,
    registry: &ToolRegistry,
    ctx: &ToolContext<'_>,
    question: &str,
    limits: &AgentLimits,
    memory: Option<&str>,
    observer: &mut dyn FnMut(&AgentEvent),
) -> AgentRun {
    let start = Instant::now();
    let wall = Duration::from_secs_f64(limits.wall_timeout_s.max(0.0));
    let render = registry.render();
    let mut run = AgentRun {
        final_answer: None,
        trace: AgentTrace::new(),
        prompt_tokens: 0,
        completion_tokens: 0,
        token_source: None,
        outcome: RunOutcome::MaxIterations,
        error: None,
        prompts: Vec::new(),
    };
    let mut push = |trace: &mut AgentTrace, event: AgentEvent| {
        observer(&event);
        trace.push(event);
    };
    let mut retries_left = limits.malformed_retry_budget;

    for _ in 0..limits.max_iterations {
        let elapsed = start.elapsed();
        if elapsed >= wall {
            run.outcome = RunOutcome::Timeout;
            return run;
        }
        let scratchpad = render_scratchpad(&run.trace).expect("loop keeps the trace well-formed");
        let mut request = CompletionRequest::new(build_prompt(&render, question, &scratchpad, memory), limits.max_output_chars);
        request.stop_sequences = vec![OBSERVATION_STOP.to_string()];
        request.timeout = Some(wall - elapsed);
        let response = backend.complete(&request);
        run.prompts.push(request.prompt);
        let response = match response {
            Ok(r) => r,
            Err(BackendError::Timeout) => {
                run.outcome = RunOutcome::Timeout;
                run.error = Some(BackendError::Timeout.to_string());
                return run;
            }
            Err(e) => {
                run.outcome = RunOutcome::BackendError;
                run.error = Some(e.to_string());
                return run;
            }
        };
        run.prompt_tokens += response.prompt_tokens;
        run.completion_tokens += response.completion_tokens;
        run.token_source = Some(match run.token_source {
            Some(s) => s.merge(response.token_source),
            None => response.token_source,
        });
        if start.elapsed() >= wall {
            run.outcome = RunOutcome::Timeout;
            return run;
        }

        let trimmed = trim_at_stop(&response.text, &request.stop_sequences);
        let hit_limit = trimmed.chars().count() >= limits.max_output_chars;
        let text: String = trimmed.chars().take(limits.max_output_chars).collect();

        match parse_step(&text) {
            ParsedStep::Finish { thought, final_answer } => {
                if !thought.is_empty() {
                    push(&mut run.trace, AgentEvent::Thought { text: thought });
                }
                push(&mut run.trace, AgentEvent::FinalAnswer { text: final_answer.clone() });
                run.final_answer = Some(final_answer);
                run.outcome = RunOutcome::Finished;
                return run;
            }
            ParsedStep::ToolCall { thought, action_name, input_text } => {
                if !thought.is_empty() {
                    push(&mut run.trace, AgentEvent::Thought { text: thought });
                }
                push(
                    &mut run.trace,
                    AgentEvent::Action {
                        action: action_name.clone(),
                        input: input_text.clone(),
                    },
                );
                let result = registry.dispatch(&action_name, &input_text, ctx);
                push(&mut run.trace, AgentEvent::Observation { text: result.content });
            }
            ParsedStep::Malformed { raw, .. } => {
                let raw = strip_thought_label(&raw);
                push(&mut run.trace, AgentEvent::Thought { text: raw });
                if hit_limit {
                    run.outcome = RunOutcome::Truncated;
                    return run;
                }
                if retries_left == 0 {
                    run.outcome = RunOutcome::ParseFailure;
                    return run;
                }
                retries_left -= 1;
                push(
                    &mut run.trace,
                    AgentEvent::Observation {
                        text: CORRECTIVE_OBSERVATION.to_string(),
                    },
                );
            }
        }
    }
    run
}
