//! Declarative cluster fixtures: namespaces, operators, pods, services and
//! metric series, loaded from YAML (JSON is accepted as a subset).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bundled `demo` cluster snapshot.
pub const DEMO_FIXTURE: &str = include_str!("../resources/demo.yaml");

/// Upper bound on samples a single generator may produce.
pub const MAX_GENERATED_SAMPLES: usize = 1_000_000;

/// Smallest accepted generator step; keeps timestamps strictly increasing
/// at epoch-scale magnitudes.
pub const MIN_GENERATOR_STEP_S: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FixtureError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate namespace `{0}`")]
    DuplicateNamespace(String),
    #[error("namespace `{namespace}`: duplicate service `{service}`")]
    DuplicateService { namespace: String, service: String },
    #[error("namespace `{namespace}`: pod `{pod}` references unknown service `{service}`")]
    DanglingServiceRef {
        namespace: String,
        pod: String,
        service: String,
    },
    #[error("namespace `{namespace}`: service `{service}` has invalid port {port}")]
    InvalidPort {
        namespace: String,
        service: String,
        port: u32,
    },
    #[error("namespace `{namespace}`: metric `{metric}` carries namespace label `{label}`")]
    NamespaceLabelMismatch {
        namespace: String,
        metric: String,
        label: String,
    },
    #[error("namespace `{namespace}`: metric `{metric}` samples are not strictly increasing at index {index}")]
    NonMonotonicSamples {
        namespace: String,
        metric: String,
        index: usize,
    },
    #[error("namespace `{namespace}`: metric `{metric}`: {reason}")]
    InvalidSeries {
        namespace: String,
        metric: String,
        reason: String,
    },
}

impl FixtureError {
    pub fn is_syntax(&self) -> bool {
        matches!(self, FixtureError::Syntax { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PodPhase {
    Running,
    Succeeded,
    Pending,
    Failed,
}

impl PodPhase {
    pub const ALL: [PodPhase; 4] = [
        PodPhase::Running,
        PodPhase::Succeeded,
        PodPhase::Pending,
        PodPhase::Failed,
    ];
}

impl fmt::Display for PodPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[default]
    TCP,
    UDP,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorInfo {
    pub name: String,
    pub version: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodInfo {
    pub name: String,
    pub phase: PodPhase,
    #[serde(rename = "services", default)]
    pub service_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortInfo {
    pub port: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub protocol: Protocol,
}

impl PortInfo {
    pub const UNNAMED: &'static str = "No name available";

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(Self::UNNAMED)
    }
}

pub const ROUTE_UNAVAILABLE: &str = "unavailable";

fn unavailable() -> String {
    ROUTE_UNAVAILABLE.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceInfo {
    pub name: String,
    #[serde(default)]
    pub ports: Vec<PortInfo>,
    #[serde(default = "unavailable")]
    pub route: String,
}

impl ServiceInfo {
    pub fn has_route(&self) -> bool {
        self.route != ROUTE_UNAVAILABLE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Counter,
}

/// Synthetic counter: samples every `step_s` from `start_ts` to `end_ts`
/// (inclusive), each increment `rate_per_s * step_s * (1 + j)` with
/// `j ~ U[-0.5, 0.5)` drawn from a generator seeded by `jitter_seed`.
/// Values are floored to whole counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub start_ts: f64,
    pub end_ts: f64,
    pub step_s: f64,
    pub rate_per_s: f64,
    #[serde(default)]
    pub jitter_seed: u64,
}

impl GeneratorSpec {
    pub fn check(&self) -> Result<(), String> {
        let finite = [self.start_ts, self.end_ts, self.step_s, self.rate_per_s]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("generator parameters must be finite".into());
        }
        if self.end_ts < self.start_ts {
            return Err("generator end_ts precedes start_ts".into());
        }
        if self.step_s < MIN_GENERATOR_STEP_S {
            return Err(format!("generator step_s must be at least {MIN_GENERATOR_STEP_S}"));
        }
        if self.rate_per_s < 0.0 {
            return Err("counter rate_per_s must be nonnegative".into());
        }
        if self.sample_count() > MAX_GENERATED_SAMPLES {
            return Err(format!("generator yields more than {MAX_GENERATED_SAMPLES} samples"));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        ((self.end_ts - self.start_ts) / self.step_s).floor() as usize + 1
    }

    /// Deterministic for a given spec.
    pub fn materialize(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.jitter_seed);
        let n = self.sample_count();
        let mut out = Vec::with_capacity(n);
        let mut total = 0.0_f64;
        let mut prev_ts = f64::NEG_INFINITY;
        for i in 0..n {
            let ts = self.start_ts + i as f64 * self.step_s;
            if ts > self.end_ts || ts <= prev_ts {
                break;
            }
            if i > 0 {
                let jitter: f64 = rng.gen_range(-0.5..0.5);
                total += self.rate_per_s * self.step_s * (1.0 + jitter);
            }
            out.push((ts, total.floor()));
            prev_ts = ts;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSeriesSpec {
    pub metric_name: String,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl MetricSeriesSpec {
    /// Explicit samples as written, or the generator's output.
    pub fn materialize(&self) -> Vec<(f64, f64)> {
        match (&self.samples, &self.generator) {
            (Some(samples), _) => samples.clone(),
            (None, Some(generator)) => generator.materialize(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Namespace {
    pub name: String,
    #[serde(default)]
    pub operators: Vec<OperatorInfo>,
    #[serde(default)]
    pub pods: Vec<PodInfo>,
    #[serde(default)]
    pub services: Vec<ServiceInfo>,
    #[serde(default)]
    pub metrics: Vec<MetricSeriesSpec>,
}

impl Namespace {
    pub fn service(&self, name: &str) -> Option<&ServiceInfo> {
        self.services.iter().find(|s| s.name == name)
    }
}

/// A validated cluster snapshot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterFixture {
    #[serde(default)]
    pub namespaces: Vec<Namespace>,
}

impl ClusterFixture {
    pub fn demo() -> ClusterFixture {
        load_fixture(DEMO_FIXTURE).expect("bundled demo fixture is valid")
    }

    pub fn namespace(&self, name: &str) -> Option<&Namespace> {
        self.namespaces.iter().find(|n| n.name == name)
    }

    /// Checks every fixture invariant, filling in a missing `namespace`
    /// label on metric series from the enclosing namespace.
    pub fn validate(&mut self) -> Result<(), FixtureError> {
        let mut seen_ns = HashSet::new();
        for ns in &mut self.namespaces {
            if !seen_ns.insert(ns.name.clone()) {
                return Err(FixtureError::DuplicateNamespace(ns.name.clone()));
            }
            let mut seen_svc = HashSet::new();
            for svc in &ns.services {
                if !seen_svc.insert(svc.name.as_str()) {
                    return Err(FixtureError::DuplicateService {
                        namespace: ns.name.clone(),
                        service: svc.name.clone(),
                    });
                }
                for port in &svc.ports {
                    if !(1..=65535).contains(&port.port) {
                        return Err(FixtureError::InvalidPort {
                            namespace: ns.name.clone(),
                            service: svc.name.clone(),
                            port: port.port,
                        });
                    }
                }
            }
            for pod in &ns.pods {
                if let Some(missing) = pod.service_refs.iter().find(|r| !seen_svc.contains(r.as_str())) {
                    return Err(FixtureError::DanglingServiceRef {
                        namespace: ns.name.clone(),
                        pod: pod.name.clone(),
                        service: missing.clone(),
                    });
                }
            }
            for metric in &mut ns.metrics {
                validate_series(&ns.name, metric)?;
            }
        }
        Ok(())
    }
}

fn validate_series(namespace: &str, metric: &mut MetricSeriesSpec) -> Result<(), FixtureError> {
    let invalid = |reason: String| FixtureError::InvalidSeries {
        namespace: namespace.to_string(),
        metric: metric.metric_name.clone(),
        reason,
    };
    if metric.metric_name.is_empty() {
        return Err(invalid("empty metric name".into()));
    }
    match metric.labels.get("namespace") {
        Some(label) if label != namespace => {
            return Err(FixtureError::NamespaceLabelMismatch {
                namespace: namespace.to_string(),
                metric: metric.metric_name.clone(),
                label: label.clone(),
            })
        }
        Some(_) => {}
        None => {
            metric.labels.insert("namespace".into(), namespace.to_string());
        }
    }
    match (&metric.samples, &metric.generator) {
        (Some(_), Some(_)) => Err(invalid("declares both samples and generator".into())),
        (None, None) => Err(invalid("declares neither samples nor generator".into())),
        (None, Some(generator)) => generator.check().map_err(invalid),
        (Some(samples), None) => {
            if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                return Err(invalid("non-finite sample".into()));
            }
            match samples.windows(2).position(|w| w[1].0 <= w[0].0) {
                Some(i) => Err(FixtureError::NonMonotonicSamples {
                    namespace: namespace.to_string(),
                    metric: metric.metric_name.clone(),
                    index: i + 1,
                }),
                None => Ok(()),
            }
        }
    }
}

/// Parses and validates a fixture document.
pub fn load_fixture(source: &str) -> Result<ClusterFixture, FixtureError> {
    let mut fixture: ClusterFixture = if source.trim().is_empty() {
        ClusterFixture::default()
    } else {
        serde_yaml::from_str(source).map_err(|e| {
            let (line, column) = e.location().map(|l| (l.line(), l.column())).unwrap_or((0, 0));
            FixtureError::Syntax {
                line,
                column,
                message: e.to_string(),
            }
        })?
    };
    fixture.validate()?;
    Ok(fixture)
}

pub fn serialize_fixture(fixture: &ClusterFixture) -> String {
    serde_yaml::to_string(fixture).expect("fixture serializes to YAML")
}
