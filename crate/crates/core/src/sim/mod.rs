//! In-memory simulated cluster and Prometheus-style time-series store.
//!
//! [`SimState`] is read-only after construction apart from the clock's
//! replay cursor; cloning it is cheap and rewinds the clock, which is how
//! the harness resets per-run state.

mod clock;
mod series;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

pub use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

pub use clock::{Clock, ClockMode};
pub use series::{filter_range, irate_points};

use crate::fixture::{ClusterFixture, OperatorInfo, PodPhase, ServiceInfo};

pub const DEFAULT_TIMEZONE: Tz = chrono_tz::America::New_York;

/// IANA zone name, e.g. `America/New_York`.
pub fn parse_timezone(name: &str) -> Result<Tz, String> {
    name.parse().map_err(|_| format!("unknown time zone `{name}`"))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("start must not exceed end")]
    InvalidRange,
    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotonicTimestamps { index: usize },
}

/// Output format for plot artifacts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotFormat {
    #[default]
    Png,
    Svg,
}

impl PlotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PlotFormat::Png => "png",
            PlotFormat::Svg => "svg",
        }
    }
}

impl fmt::Display for PlotFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for PlotFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "png" => Ok(PlotFormat::Png),
            "svg" => Ok(PlotFormat::Svg),
            other => Err(format!("unknown plot format `{other}`")),
        }
    }
}

/// One materialized series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub metric_name: String,
    pub labels: std::collections::BTreeMap<String, String>,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct PodCounts {
    pub running: usize,
    pub succeeded: usize,
    pub pending: usize,
    pub failed: usize,
}

impl PodCounts {
    pub fn get(&self, phase: PodPhase) -> usize {
        match phase {
            PodPhase::Running => self.running,
            PodPhase::Succeeded => self.succeeded,
            PodPhase::Pending => self.pending,
            PodPhase::Failed => self.failed,
        }
    }

    fn bump(&mut self, phase: PodPhase) {
        match phase {
            PodPhase::Running => self.running += 1,
            PodPhase::Succeeded => self.succeeded += 1,
            PodPhase::Pending => self.pending += 1,
            PodPhase::Failed => self.failed += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningPod {
    pub name: String,
    pub services: Vec<ServiceInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodSummary {
    pub namespace: String,
    pub pod_counts: PodCounts,
    pub running_pods: Vec<RunningPod>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeStatus {
    Ok,
    NoSamplesInRange,
    NoSuchMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub status: RangeStatus,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SimState {
    fixture: Arc<ClusterFixture>,
    series: Arc<Vec<Series>>,
    artifact_dir: PathBuf,
    clock: Clock,
    timezone: Tz,
    plot_format: PlotFormat,
}

impl SimState {
    pub fn new(fixture: ClusterFixture, artifact_dir: impl Into<PathBuf>) -> Self {
        let series = fixture
            .namespaces
            .iter()
            .flat_map(|ns| ns.metrics.iter())
            .map(|m| Series {
                metric_name: m.metric_name.clone(),
                labels: m.labels.clone(),
                samples: m.materialize(),
            })
            .collect();
        SimState {
            fixture: Arc::new(fixture),
            series: Arc::new(series),
            artifact_dir: artifact_dir.into(),
            clock: Clock::system(),
            timezone: DEFAULT_TIMEZONE,
            plot_format: PlotFormat::Png,
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_timezone(mut self, tz: Tz) -> Self {
        self.timezone = tz;
        self
    }

    pub fn with_plot_format(mut self, format: PlotFormat) -> Self {
        self.plot_format = format;
        self
    }

    /// Copy for a new run: shares fixture and series, rewinds the clock.
    pub fn fresh_run(&self) -> SimState {
        self.clone()
    }

    pub fn fixture(&self) -> &ClusterFixture {
        &self.fixture
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn artifact_dir(&self) -> &Path {
        &self.artifact_dir
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn timezone(&self) -> Tz {
        self.timezone
    }

    pub fn plot_format(&self) -> PlotFormat {
        self.plot_format
    }

    /// Operators of `namespace` in fixture order; empty when unknown.
    pub fn list_operators(&self, namespace: &str) -> Vec<OperatorInfo> {
        self.fixture
            .namespace(namespace)
            .map(|ns| ns.operators.clone())
            .unwrap_or_default()
    }

    pub fn pod_summary(&self, namespace: &str) -> PodSummary {
        let mut summary = PodSummary {
            namespace: namespace.to_string(),
            pod_counts: PodCounts::default(),
            running_pods: Vec::new(),
        };
        let Some(ns) = self.fixture.namespace(namespace) else {
            return summary;
        };
        for pod in &ns.pods {
            summary.pod_counts.bump(pod.phase);
            if pod.phase == PodPhase::Running {
                summary.running_pods.push(RunningPod {
                    name: pod.name.clone(),
                    services: pod
                        .service_refs
                        .iter()
                        .filter_map(|r| ns.service(r).cloned())
                        .collect(),
                });
            }
        }
        summary
    }

    pub fn service_summary(&self, namespace: &str) -> Vec<ServiceInfo> {
        self.fixture
            .namespace(namespace)
            .map(|ns| ns.services.clone())
            .unwrap_or_default()
    }

    /// Sorted, de-duplicated names of series whose label `filter_name`
    /// equals `filter_value`.
    pub fn metric_names(&self, filter_name: &str, filter_value: &str) -> Vec<String> {
        self.series
            .iter()
            .filter(|s| s.labels.get(filter_name).map(String::as_str) == Some(filter_value))
            .map(|s| s.metric_name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn all_metric_names(&self) -> Vec<String> {
        self.series
            .iter()
            .map(|s| s.metric_name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn has_metric(&self, metric_name: &str) -> bool {
        self.series.iter().any(|s| s.metric_name == metric_name)
    }

    /// Samples of every series named `metric_name` with `start <= t <= end`,
    /// merged ascending by timestamp.
    pub fn range_samples(&self, metric_name: &str, start: f64, end: f64) -> Result<RangeResult, SimError> {
        if start.is_nan() || end.is_nan() || start > end {
            return Err(SimError::InvalidRange);
        }
        let matching: Vec<&Series> = self.series.iter().filter(|s| s.metric_name == metric_name).collect();
        if matching.is_empty() {
            return Ok(RangeResult {
                status: RangeStatus::NoSuchMetric,
                samples: Vec::new(),
            });
        }
        let mut samples: Vec<(f64, f64)> = matching
            .iter()
            .flat_map(|s| filter_range(&s.samples, start, end))
            .collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let status = if samples.is_empty() {
            RangeStatus::NoSamplesInRange
        } else {
            RangeStatus::Ok
        };
        Ok(RangeResult { status, samples })
    }

    /// Port of service `name` in `namespace`, if it exposes `port`.
    pub fn service_exposes(&self, namespace: &str, name: &str, port: u32) -> bool {
        self.fixture
            .namespace(namespace)
            .and_then(|ns| ns.service(name))
            .map(|svc| svc.ports.iter().any(|p| p.port == port))
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::load_fixture;

    fn demo() -> SimState {
        SimState::new(ClusterFixture::demo(), std::env::temp_dir())
    }

    fn small() -> SimState {
        let src = r#"
namespaces:
  - name: a
    operators:
      - { name: op1, version: "1.0", status: Succeeded }
      - { name: op2, version: "2.0", status: Installing }
    pods:
      - { name: p1, phase: Running, services: [s1] }
      - { name: p2, phase: Running, services: [s2] }
      - { name: p3, phase: Succeeded }
    services:
      - { name: s1, ports: [{port: 80, name: http}], route: "http://s1.example/" }
      - { name: s2, ports: [{port: 81}] }
    metrics:
      - { metric_name: m, samples: [[10, 1], [20, 2], [30, 3]] }
      - { metric_name: m, labels: {shard: b}, samples: [[15, 7]] }
      - { metric_name: n, samples: [[10, 1]] }
  - name: empty
"#;
        SimState::new(load_fixture(src).unwrap(), std::env::temp_dir())
    }

    #[test]
    fn operators_in_fixture_order() {
        let s = demo();
        let ops = s.list_operators("demo");
        assert_eq!(ops.len(), 1);
        assert_eq!((ops[0].name.as_str(), ops[0].version.as_str(), ops[0].status.as_str()),
            ("rhods-operator", "2.8.0", "Succeeded"));
        assert!(s.list_operators("nonexistent").is_empty());
        let names: Vec<_> = small().list_operators("a").into_iter().map(|o| o.name).collect();
        assert_eq!(names, vec!["op1", "op2"]);
    }

    #[test]
    fn pod_summary_counts_and_details() {
        let s = small();
        let sum = s.pod_summary("a");
        assert_eq!(sum.pod_counts, PodCounts { running: 2, succeeded: 1, pending: 0, failed: 0 });
        assert_eq!(sum.running_pods.len(), 2);
        assert_eq!(sum.running_pods[1].services[0].route, "unavailable");
        let empty = s.pod_summary("empty");
        assert_eq!(empty.pod_counts, PodCounts::default());
        assert!(empty.running_pods.is_empty());
    }

    #[test]
    fn service_summary_demo() {
        let s = demo();
        let svcs = s.service_summary("demo");
        let prom = svcs.iter().find(|x| x.name == "prometheus-operated").unwrap();
        let ports: Vec<_> = prom.ports.iter().map(|p| (p.port, p.display_name(), p.protocol.to_string())).collect();
        assert_eq!(ports, vec![(9090, "web", "TCP".to_string()), (10901, "grpc", "TCP".to_string())]);
        assert_eq!(prom.route, "unavailable");
        let grafana = svcs.iter().find(|x| x.name == "grafana-demo-service").unwrap();
        assert_eq!((grafana.ports[0].port, grafana.ports[0].display_name()), (3000, "grafana"));
        assert!(grafana.route.starts_with("http://"));
        assert!(s.service_summary("nope").is_empty());
    }

    #[test]
    fn metric_names_filter_and_dedup() {
        let s = demo();
        assert!(s.metric_names("namespace", "demo").contains(&"load_generator_total_msg".to_string()));
        assert!(s.metric_names("namespace", "empty-ns").is_empty());
        assert_eq!(small().metric_names("namespace", "a"), vec!["m", "n"]);
    }

    #[test]
    fn range_samples_contract() {
        let s = small();
        let r = s.range_samples("n", 0.0, 100.0).unwrap();
        assert_eq!(r.samples, vec![(10.0, 1.0)]);
        let merged = s.range_samples("m", 15.0, 30.0).unwrap();
        assert_eq!(merged.samples, vec![(15.0, 7.0), (20.0, 2.0), (30.0, 3.0)]);
        let none = s.range_samples("n", 40.0, 50.0).unwrap();
        assert_eq!(none.status, RangeStatus::NoSamplesInRange);
        let unknown = s.range_samples("zzz", 0.0, 1.0).unwrap();
        assert_eq!(unknown.status, RangeStatus::NoSuchMetric);
        assert_eq!(s.range_samples("m", 2.0, 1.0), Err(SimError::InvalidRange));
    }

    #[test]
    fn fresh_run_rewinds_clock() {
        let s = demo().with_clock(Clock::replay(vec![5.0, 6.0]));
        assert_eq!(s.clock().now(), 5.0);
        assert_eq!(s.clock().now(), 6.0);
        assert_eq!(s.fresh_run().clock().now(), 5.0);
    }
}
