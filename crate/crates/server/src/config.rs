//! Service configuration (YAML).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use aiops_core::llm::http::{backend_from_spec, EndpointConfig};
use aiops_core::llm::CompletionBackend;
use aiops_core::react::{AgentLimits, MemoryPolicy};
use aiops_core::sim::{parse_timezone, PlotFormat};
use aiops_core::suite::builtin_suite;
use aiops_core::tools::DEFAULT_TOOL_SEED;
use aiops_core::{load_fixture, ClusterFixture, Clock, SimState};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error("config: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub artifact_dir: PathBuf,
    /// Fixture file; the bundled demo cluster when absent.
    pub fixture: Option<PathBuf>,
    /// `system`, `fixed:<ts>` or `replay:<ts>,...`.
    pub clock: String,
    pub timezone: String,
    pub plot_format: PlotFormat,
    /// Backend specs offered to clients; the first is the default.
    /// When empty: `scripted:golden` followed by every endpoint id.
    pub backends: Vec<String>,
    pub endpoints: Vec<EndpointConfig>,
    pub limits: AgentLimits,
    pub memory: MemoryPolicy,
    pub max_concurrent_runs: usize,
    /// Finished traces kept for replay; older ones are dropped.
    pub max_stored_traces: usize,
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            artifact_dir: PathBuf::from("artifacts"),
            fixture: None,
            clock: "system".into(),
            timezone: "America/New_York".into(),
            plot_format: PlotFormat::Png,
            backends: Vec::new(),
            endpoints: Vec::new(),
            limits: AgentLimits::default(),
            memory: MemoryPolicy::default(),
            max_concurrent_runs: 8,
            max_stored_traces: 1000,
            seed: DEFAULT_TOOL_SEED,
        }
    }
}

impl ServiceConfig {
    pub fn from_yaml(source: &str) -> Result<Self, ConfigError> {
        if source.trim().is_empty() {
            return Ok(Self::default());
        }
        Ok(serde_yaml::from_str(source)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_yaml(&text)
    }

    pub fn backend_specs(&self) -> Vec<String> {
        if !self.backends.is_empty() {
            return self.backends.clone();
        }
        std::iter::once("scripted:golden".to_string())
            .chain(self.endpoints.iter().map(|e| e.id.clone()))
            .collect()
    }

    pub fn build_backends(&self) -> Result<Vec<Arc<dyn CompletionBackend>>, ConfigError> {
        let suite = builtin_suite();
        self.backend_specs()
            .iter()
            .map(|spec| backend_from_spec(spec, &self.endpoints, &suite).map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    pub fn build_state(&self) -> Result<SimState, ConfigError> {
        let fixture = match &self.fixture {
            None => ClusterFixture::demo(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_fixture(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
        };
        let clock: Clock = self.clock.parse().map_err(ConfigError::Invalid)?;
        let tz = parse_timezone(&self.timezone).map_err(ConfigError::Invalid)?;
        Ok(SimState::new(fixture, &self.artifact_dir)
            .with_clock(clock)
            .with_timezone(tz)
            .with_plot_format(self.plot_format))
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.max_concurrent_runs == 0 {
            return Err(ConfigError::Invalid("max_concurrent_runs must be at least 1".into()));
        }
        self.limits.check().map_err(ConfigError::Invalid)
    }
}
