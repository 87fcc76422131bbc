//! The completion boundary: request/response types, the backend trait,
//! deterministic scripted backends and (with the `http` feature) a generic
//! chat-completions client.

#[cfg(feature = "http")]
pub mod http;
mod golden;
pub mod scripted;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domain::{QueryCase, TokenSource};

pub use golden::golden_step;
pub use scripted::{
    load_policy_pack, FaultKind, PolicyPack, PolicyPackError, ScriptedBackend, ScriptedBehavior,
};

pub const OBSERVATION_STOP: &str = "Observation:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub stop_sequences: Vec<String>,
    pub max_output_chars: usize,
    /// Time left for this call; backends should give up once it elapses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<Duration>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, max_output_chars: usize) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            stop_sequences: vec![OBSERVATION_STOP.to_string()],
            max_output_chars,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub token_source: TokenSource,
}

impl CompletionResponse {
    /// Response with token counts estimated by [`approx_tokens`].
    pub fn approximated(prompt: &str, text: String) -> Self {
        CompletionResponse {
            prompt_tokens: approx_tokens(prompt),
            completion_tokens: approx_tokens(&text),
            text,
            token_source: TokenSource::Approximated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
}

/// Builds a scripted backend from its spec string; `Ok(None)` when `spec`
/// is not a `scripted:` spec.
///
/// - `scripted:golden`
/// - `scripted:fault:<kind>` (`hallucinate_dates`, `deflect`, `flawed_order`, `truncate`, `stall`)
/// - `scripted:stall:<ms>`
/// - `scripted:pack:<path>`; entries are bound to `suite` by query id
pub fn scripted_from_spec(spec: &str, suite: &[QueryCase]) -> Result<Option<ScriptedBackend>, BackendError> {
    let Some(rest) = spec.strip_prefix("scripted:") else {
        return Ok(None);
    };
    let backend = match rest.split_once(':') {
        None if rest == "golden" => ScriptedBackend::golden(),
        Some(("fault", kind)) => ScriptedBackend::fault(kind.parse().map_err(BackendError::Config)?),
        Some(("stall", ms)) => ScriptedBackend::stall(
            ms.parse()
                .map_err(|_| BackendError::Config(format!("bad stall milliseconds `{ms}`")))?,
        ),
        Some(("pack", path)) => {
            let source = std::fs::read_to_string(path)
                .map_err(|e| BackendError::Config(format!("cannot read policy pack {path}: {e}")))?;
            let pack = load_policy_pack(&source).map_err(|e| BackendError::Config(e.to_string()))?;
            ScriptedBackend::from_pack(&pack, suite).map_err(|e| BackendError::Config(e.to_string()))?
        }
        _ => return Err(BackendError::Config(format!("unknown scripted backend `{spec}`"))),
    };
    Ok(Some(backend))
}

/// Token estimate used when a provider reports no usage: maximal
/// non-whitespace runs plus one token per started 100 characters.
pub fn approx_tokens(text: &str) -> u64 {
    let words = text.split_whitespace().count() as u64;
    let chars = text.chars().count() as u64;
    words + chars.div_ceil(100)
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub fn trim_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    &text[..cut]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_token_rule() {
        assert_eq!(approx_tokens(""), 0);
        assert_eq!(approx_tokens("hello world"), 3);
        assert_eq!(approx_tokens(&"a".repeat(100)), 2);
        assert_eq!(approx_tokens(&"a".repeat(101)), 3);
        assert_eq!(approx_tokens("  \n\t "), 1);
    }

    #[test]
    fn stop_trim() {
        let stops = vec!["Observation:".to_string()];
        assert_eq!(trim_at_stop("Action: A\nAction Input: {}\nObservation: x", &stops), "Action: A\nAction Input: {}\n");
        assert_eq!(trim_at_stop("nothing", &stops), "nothing");
    }

    #[test]
    fn scripted_specs() {
        let suite = crate::suite::builtin_suite();
        let id = |s: &str| scripted_from_spec(s, &suite).unwrap().unwrap().id().to_string();
        assert_eq!(id("scripted:golden"), "scripted:golden");
        assert_eq!(id("scripted:fault:truncate"), "scripted:fault:truncate");
        assert_eq!(id("scripted:stall:10"), "scripted:fault:stall");
        assert!(scripted_from_spec("gpt", &suite).unwrap().is_none());
        assert!(scripted_from_spec("scripted:fault:sulk", &suite).is_err());
        assert!(scripted_from_spec("scripted:pack:/nonexistent.yaml", &suite).is_err());
    }

    #[test]
    fn requests_carry_the_observation_stop() {
        assert_eq!(CompletionRequest::new("p", 10).stop_sequences, vec!["Observation:"]);
    }
}
