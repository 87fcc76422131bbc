//! OpenAI-compatible chat-completions client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use std::sync::Arc;

use super::{scripted_from_spec, trim_at_stop, BackendError, CompletionBackend, CompletionRequest, CompletionResponse};
use crate::domain::{QueryCase, TokenSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub id: String,
    /// Base URL; `/v1/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Token-bucket rate limit; unlimited when absent.
    #[serde(default)]
    pub requests_per_second: Option<f64>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> f64 {
    120.0
}

fn default_retries() -> u32 {
    1
}

fn default_backoff() -> u64 {
    500
}

impl EndpointConfig {
    pub fn new(id: &str, base_url: &str, model: &str) -> Self {
        EndpointConfig {
            id: id.into(),
            base_url: base_url.into(),
            model: model.into(),
            token_env: None,
            timeout_s: default_timeout(),
            requests_per_second: None,
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
        }
    }
}

/// Backend registry file: `endpoints: [...]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointsFile {
    #[serde(default)]
    pub endpoints: Vec<EndpointConfig>,
}

pub fn load_endpoints(source: &str) -> Result<Vec<EndpointConfig>, BackendError> {
    let file: EndpointsFile = serde_yaml::from_str(source).map_err(|e| BackendError::Config(e.to_string()))?;
    let mut seen = std::collections::HashSet::new();
    for e in &file.endpoints {
        if !seen.insert(e.id.as_str()) {
            return Err(BackendError::Config(format!("duplicate endpoint id `{}`", e.id)));
        }
    }
    Ok(file.endpoints)
}

/// A scripted spec (see [`scripted_from_spec`]) or the id of one of `endpoints`.
pub fn backend_from_spec(
    spec: &str,
    endpoints: &[EndpointConfig],
    suite: &[QueryCase],
) -> Result<Arc<dyn CompletionBackend>, BackendError> {
    if let Some(b) = scripted_from_spec(spec, suite)? {
        return Ok(Arc::new(b));
    }
    let cfg = endpoints
        .iter()
        .find(|e| e.id == spec)
        .ok_or_else(|| BackendError::Config(format!("unknown backend `{spec}`")))?;
    Ok(Arc::new(HttpBackend::new(cfg.clone())?))
}

/// Classic token bucket with capacity 1 burst per second of rate.
#[derive(Debug)]
struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        TokenBucket {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut st = self.state.lock().expect("bucket lock");
                let now = Instant::now();
                let refill = now.duration_since(st.1).as_secs_f64() * self.rate;
                st.0 = (st.0 + refill).min(self.capacity);
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                (1.0 - st.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug)]
pub struct HttpBackend {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
    bucket: Option<TokenBucket>,
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        if config.base_url.trim().is_empty() || config.model.trim().is_empty() {
            return Err(BackendError::Config("base_url and model are required".into()));
        }
        let token = match &config.token_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let bucket = match config.requests_per_second {
            Some(r) if r > 0.0 => Some(TokenBucket::new(r)),
            Some(_) => return Err(BackendError::Config("requests_per_second must be positive".into())),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend {
            config,
            client,
            token,
            bucket,
        })
    }

    fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &CompletionRequest, timeout: Duration) -> Result<CompletionResponse, BackendError> {
        if let Some(b) = &self.bucket {
            b.acquire();
        }
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "stop": request.stop_sequences,
            "temperature": 0,
        });
        let mut req = self.client.post(self.url()).timeout(timeout).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        if status >= 400 {
            return Err(BackendError::Http {
                status,
                body: text.chars().take(300).collect(),
            });
        }
        parse_completion(&request.prompt, &text, &request.stop_sequences)
    }
}

/// Maps a chat-completions response body onto a [`CompletionResponse`].
pub fn parse_completion(prompt: &str, body: &str, stops: &[String]) -> Result<CompletionResponse, BackendError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| BackendError::InvalidResponse(format!("not JSON: {e}")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| BackendError::InvalidResponse("missing choices[0].message.content".into()))?;
    // Providers that ignore `stop` are trimmed here.
    let text = trim_at_stop(content, stops).to_string();
    let usage = v.get("usage").and_then(|u| {
        Some((
            u.get("prompt_tokens")?.as_u64()?,
            u.get("completion_tokens")?.as_u64()?,
        ))
    });
    Ok(match usage {
        Some((p, c)) => CompletionResponse {
            text,
            prompt_tokens: p,
            completion_tokens: c,
            token_source: TokenSource::ProviderReported,
        },
        None => CompletionResponse::approximated(prompt, text),
    })
}

impl CompletionBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let started = Instant::now();
        let budget = request
            .timeout
            .unwrap_or(Duration::MAX)
            .min(Duration::from_secs_f64(self.config.timeout_s.max(0.001)));
        let mut backoff = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            let left = budget.saturating_sub(started.elapsed());
            if left.is_zero() {
                return Err(BackendError::Timeout);
            }
            match self.attempt(request, left) {
                Ok(r) => return Ok(r),
                Err(e @ (BackendError::Config(_) | BackendError::InvalidResponse(_))) => return Err(e),
                Err(e) if attempt >= self.config.max_retries => return Err(e),
                Err(_) => {
                    attempt += 1;
                    std::thread::sleep(backoff.min(budget.saturating_sub(started.elapsed())));
                    backoff *= 2;
                }
            }
        }
    }
}
