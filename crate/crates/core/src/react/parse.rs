use serde::{Deserialize, Serialize};

use crate::domain::{AgentEvent, AgentTrace, TraceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ParsedStep {
    ToolCall {
        thought: String,
        action_name: String,
        input_text: String,
    },
    Finish {
        thought: String,
        final_answer: String,
    },
    Malformed {
        raw: String,
        reason: String,
    },
}

pub const NO_MARKER: &str = "no Action or Final Answer marker";
pub const EMPTY_ACTION: &str = "empty action name";
pub const MISSING_INPUT: &str = "missing Action Input after Action";

fn marker<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    line.trim_start().strip_prefix(label)
}

/// Text before a marker, without its leading `Thought:` label.
pub fn strip_thought_label(text: &str) -> String {
    let t = text.trim();
    t.strip_prefix("Thought:").unwrap_or(t).trim().to_string()
}

/// Parses one completion. Markers count only at the start of a line; a
/// `Final Answer:` wins if it comes before any `Action:`.
pub fn parse_step(text: &str) -> ParsedStep {
    let lines: Vec<&str> = text.lines().collect();
    let final_at = lines.iter().position(|l| marker(l, "Final Answer:").is_some());
    let action_at = lines
        .iter()
        .position(|l| marker(l, "Action:").is_some());
    let malformed = |reason: &str| ParsedStep::Malformed {
        raw: text.to_string(),
        reason: reason.to_string(),
    };

    if let Some(f) = final_at.filter(|f| action_at.is_none_or(|a| *f < a)) {
        let mut answer = marker(lines[f], "Final Answer:").unwrap_or_default().to_string();
        for l in &lines[f + 1..] {
            answer.push('\n');
            answer.push_str(l);
        }
        return ParsedStep::Finish {
            thought: strip_thought_label(&lines[..f].join("\n")),
            final_answer: answer.trim().to_string(),
        };
    }

    let Some(a) = action_at else {
        return malformed(NO_MARKER);
    };
    let action_name = marker(lines[a], "Action:").unwrap_or_default().trim().to_string();
    if action_name.is_empty() {
        return malformed(EMPTY_ACTION);
    }
    let Some(i) = (a + 1..lines.len()).find(|&i| !lines[i].trim().is_empty()) else {
        return malformed(MISSING_INPUT);
    };
    let Some(first) = marker(lines[i], "Action Input:") else {
        return malformed(MISSING_INPUT);
    };
    let mut input = first.to_string();
    for l in &lines[i + 1..] {
        if l.trim().is_empty() || marker(l, "Observation:").is_some() {
            break;
        }
        input.push('\n');
        input.push_str(l);
    }
    ParsedStep::ToolCall {
        thought: strip_thought_label(&lines[..a].join("\n")),
        action_name,
        input_text: input.trim().to_string(),
    }
}

/// Serializes the trace as the prompt's scratchpad:
/// `Thought:`/`Action:`/`Action Input:`/`Observation:` lines in order.
pub fn render_scratchpad(trace: &AgentTrace) -> Result<String, TraceError> {
    trace.validate()?;
    let mut out = String::new();
    for event in &trace.events {
        match event {
            AgentEvent::Thought { text } => {
                out.push_str("Thought: ");
                out.push_str(text);
                out.push('\n');
            }
            AgentEvent::Action { action, input } => {
                out.push_str("Action: ");
                out.push_str(action);
                out.push_str("\nAction Input: ");
                out.push_str(input);
                out.push('\n');
            }
            AgentEvent::Observation { text } => {
                out.push_str("Observation: ");
                out.push_str(text);
                out.push('\n');
            }
            AgentEvent::FinalAnswer { text } => {
                out.push_str("Final Answer: ");
                out.push_str(text);
                out.push('\n');
            }
        }
    }
    Ok(out)
}
