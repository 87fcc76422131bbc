//! `bench`: runs the query suite against one or more backends and writes
//! the accuracy, latency and token tables.
//!
//! With no flags, `bench run` uses the bundled fixture and suite, the golden
//! scripted backend and 10 repetitions.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use aiops_core::eval::{aggregate, emit_reports, run_benchmark_with, write_records, BenchmarkReport, ReportFormat, SuiteRunConfig};
use aiops_core::llm::http::{backend_from_spec, load_endpoints};
use aiops_core::react::{AgentLimits, MemoryPolicy};
use aiops_core::sim::{parse_timezone, PlotFormat};
use aiops_core::suite::load_suite;
use aiops_core::tools::{ToolRegistry, DEFAULT_TOOL_SEED};
use aiops_core::{builtin_suite, load_fixture, ClusterFixture, Clock, QueryCase, RunRecord, SimState};

/// Clock reading used by default: the end of the reference Q-24 trace.
pub const DEFAULT_CLOCK: &str = "fixed:1730500568.411993";

#[derive(Debug, Parser)]
#[command(name = "bench", about = "Benchmark LLM-backed ReAct agents on IT-operations queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the suite and write reports.
    Run(RunArgs),
    /// Load and check a cluster fixture.
    ValidateFixture {
        file: PathBuf,
    },
    /// Print the query suite.
    ShowSuite {
        #[arg(long, default_value = "builtin")]
        suite: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Suite file, or `builtin`.
    #[arg(long, default_value = "builtin")]
    pub suite: String,
    /// Fixture file, or `builtin`.
    #[arg(long, default_value = "builtin")]
    pub fixture: String,
    /// Backend spec (repeatable): `scripted:golden`, `scripted:fault:<kind>`,
    /// `scripted:stall:<ms>`, `scripted:pack:<file>`, or an endpoint id from
    /// `--backends-config`.
    #[arg(long = "backend", default_values_t = vec!["scripted:golden".to_string()])]
    pub backends: Vec<String>,
    /// Endpoint definitions (YAML with an `endpoints:` list).
    #[arg(long)]
    pub backends_config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub reps: u32,
    /// Seed for seeded tools (MLASP search).
    #[arg(long, default_value_t = DEFAULT_TOOL_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = ReportFormat::ALL.map(|f| f.to_string()))]
    pub format: Vec<String>,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub memory: Switch,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// `system`, `fixed:<ts>` or `replay:<ts>,<ts>,...`.
    #[arg(long, default_value = DEFAULT_CLOCK)]
    pub clock: String,
    #[arg(long, default_value = "America/New_York")]
    pub tz: String,
    #[arg(long, default_value = "png")]
    pub plot_format: String,
    /// Wall-clock limit per run, seconds.
    #[arg(long)]
    pub timeout_s: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Suppress per-run progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl RunArgs {
    /// Defaults, as `bench run` with no flags.
    pub fn defaults() -> Self {
        match Cli::parse_from(["bench", "run"]).command {
            Command::Run(args) => args,
            _ => unreachable!(),
        }
    }
}

pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub report: BenchmarkReport,
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
}

pub fn load_suite_arg(arg: &str) -> anyhow::Result<Vec<QueryCase>> {
    if arg == "builtin" {
        return Ok(builtin_suite());
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading suite {arg}"))?;
    Ok(load_suite(&text)?)
}

pub fn load_fixture_arg(arg: &str) -> anyhow::Result<ClusterFixture> {
    if arg == "builtin" {
        return Ok(ClusterFixture::demo());
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading fixture {arg}"))?;
    Ok(load_fixture(&text)?)
}

fn parse_formats(raw: &[String]) -> anyhow::Result<Vec<ReportFormat>> {
    let mut out = Vec::new();
    for f in raw {
        let f: ReportFormat = f.parse().map_err(anyhow::Error::msg)?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        bail!("no report format selected");
    }
    Ok(out)
}

/// Builds the simulated cluster the run will use.
pub fn build_state(args: &RunArgs) -> anyhow::Result<SimState> {
    let fixture = load_fixture_arg(&args.fixture)?;
    let clock: Clock = args.clock.parse().map_err(anyhow::Error::msg)?;
    let tz = parse_timezone(&args.tz).map_err(anyhow::Error::msg)?;
    let plot: PlotFormat = args.plot_format.parse().map_err(anyhow::Error::msg)?;
    Ok(SimState::new(fixture, args.out.join("artifacts"))
        .with_clock(clock)
        .with_timezone(tz)
        .with_plot_format(plot))
}

/// Runs the sweep and writes `records.jsonl` plus every report table into
/// `args.out`. Failing queries are data, not errors.
pub fn run(args: &RunArgs) -> anyhow::Result<RunOutput> {
    let suite = load_suite_arg(&args.suite)?;
    let formats = parse_formats(&args.format)?;
    let endpoints = match &args.backends_config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            load_endpoints(&text)?
        }
        None => Vec::new(),
    };
    let backends = args
        .backends
        .iter()
        .map(|spec| backend_from_spec(spec, &endpoints, &suite))
        .collect::<Result<Vec<_>, _>>()?;
    let state = build_state(args)?;
    std::fs::create_dir_all(state.artifact_dir())
        .with_context(|| format!("creating {}", state.artifact_dir().display()))?;

    let mut limits = AgentLimits::default();
    if let Some(t) = args.timeout_s {
        limits.wall_timeout_s = t;
    }
    if let Some(n) = args.max_iterations {
        limits.max_iterations = n;
    }
    let mut config = SuiteRunConfig::new(suite, backends);
    config.repetitions = args.reps;
    config.seed = args.seed;
    config.parallel_workers = args.workers;
    config.limits = limits;
    config.memory = match args.memory {
        Switch::On => MemoryPolicy::on(),
        Switch::Off => MemoryPolicy::default(),
    };

    let total = config.suite.len() * config.backends.len() * args.reps as usize;
    let done = AtomicUsize::new(0);
    let quiet = args.quiet;
    let progress = |r: &RunRecord| {
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if !quiet {
            eprintln!(
                "[{n}/{total}] {} {} rep {}: {} ({:.3}s)",
                r.backend_id,
                r.query_id,
                r.repetition,
                if r.success { "pass".to_string() } else { r.failure_kind.to_string() },
                r.wall_seconds
            );
        }
    };
    let started = Instant::now();
    let registry = ToolRegistry::standard();
    let records = run_benchmark_with(&config, &registry, &state, &progress)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    let report = aggregate(&records);
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let records_path = args.out.join("records.jsonl");
    write_records(&records, &records_path)?;
    let mut files = emit_reports(&report, &args.out, &formats)?;
    files.insert(0, records_path);
    Ok(RunOutput {
        records,
        report,
        files,
        wall_seconds,
    })
}

/// One line: overall pass rate and perfect queries, per backend.
pub fn summary_lines(out: &RunOutput) -> Vec<String> {
    out.report
        .backends
        .iter()
        .map(|b| {
            let rs: Vec<&RunRecord> = out.records.iter().filter(|r| &r.backend_id == b).collect();
            let ok = rs.iter().filter(|r| r.success).count();
            let cells: Vec<_> = out.report.cells.iter().filter(|c| &c.backend_id == b).collect();
            let perfect = cells.iter().filter(|c| c.successes == c.repetitions).count();
            format!(
                "{b}: {ok}/{} runs passed ({:.1}%), {perfect}/{} queries at 100%",
                rs.len(),
                100.0 * ok as f64 / rs.len().max(1) as f64,
                cells.len()
            )
        })
        .collect()
}

pub fn validate_fixture(path: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let fixture = load_fixture(&text)?;
    for ns in &fixture.namespaces {
        writeln!(
            out,
            "{}: {} operators, {} pods, {} services, {} metric series",
            ns.name,
            ns.operators.len(),
            ns.pods.len(),
            ns.services.len(),
            ns.metrics.len()
        )?;
    }
    writeln!(out, "ok")?;
    Ok(())
}

pub fn show_suite(suite: &[QueryCase], out: &mut dyn Write) -> anyhow::Result<()> {
    for q in suite {
        let tools: Vec<String> = q.expected_tools.iter().map(|t| t.to_string()).collect();
        writeln!(out, "{}\t{}\t[{}]\t{}", q.id, q.category, tools.join(","), q.text)?;
    }
    Ok(())
}
