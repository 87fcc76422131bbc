//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Oracles here are written independently of the library code they check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aiops_bench::{run, RunArgs};
use aiops_core::domain::{AgentEvent, AgentTrace, RunOutcome};
use aiops_core::eval::{aggregate, format_accuracy, percentile, run_benchmark, SuiteRunConfig};
use aiops_core::llm::scripted::{FaultKind, ScriptedBackend};
use aiops_core::react::{build_prompt, parse_step, render_scratchpad, run_agent, AgentLimits, ParsedStep};
use aiops_core::sim::irate_points;
use aiops_core::tools::mlasp::within_band;
use aiops_core::tools::{mlasp_search, ToolContext, ToolRegistry};
use aiops_core::{builtin_suite, Category, ClusterFixture, Clock, FailureKind, RunRecord, SimState, ToolId};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const Q24_INPUT: &str = "Find out the Prometheus service name and port number running in namespace demo. Use it to to plot all the prometheus metric data for the metric load_generator_total_msg starting 48 hours ago until now. Return only the content string of the tool and nothing else.";
const Q24_FILE: &str = "FILE-plot-load_generator_total_msg-1730327770-1730500568.png";
const TRACE_END: f64 = 1730500568.411993;

fn state(dir: &std::path::Path, clock: Clock) -> SimState {
    SimState::new(ClusterFixture::demo(), dir).with_clock(clock)
}

fn golden_q24() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // The reference trace reads the clock twice, ~1.92 s apart.
    let clock: Clock = format!("replay:{TRACE_END},1730500570.333979").parse()?;
    let st = state(dir.path(), clock);
    let registry = ToolRegistry::standard();
    let started = Instant::now();
    let run = run_agent(
        &ScriptedBackend::golden(),
        &registry,
        &ToolContext::new(&st),
        Q24_INPUT,
        &AgentLimits::default(),
        None,
        &mut |_| {},
    );
    let elapsed = started.elapsed().as_secs_f64();
    ensure!(run.outcome == RunOutcome::Finished, "outcome {:?}", run.outcome);
    ensure!(run.final_answer.as_deref() == Some(Q24_FILE), "answer {:?}", run.final_answer);
    ensure!(dir.path().join(Q24_FILE).is_file(), "artifact missing");
    let tools: Vec<Option<ToolId>> = run.trace.action_names().iter().map(|a| registry.tool_id(a)).collect();
    let expected = [
        "Summarize_Services_Information_In_OpenShift_Namespace",
        "Get_timestamp_and_time_ISO",
        "Get_timestamp_and_time_ISO",
        "File_create_plot_irate",
    ];
    ensure!(run.trace.action_names() == expected, "actions {:?}", run.trace.action_names());
    ensure!(elapsed < 1.0, "took {elapsed:.3}s");
    Ok(format!("{tools:?} in {elapsed:.3}s"))
}

/// Data rows of a report CSV, keyed by the first column.
fn csv_rows(path: &std::path::Path) -> Result<Vec<Vec<String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn golden_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut args = RunArgs::defaults();
    args.out = dir.path().to_path_buf();
    args.quiet = true;
    let out = run(&args).map_err(|e| format!("{e:#}"))?;
    ensure!(out.wall_seconds < 60.0, "took {:.1}s", out.wall_seconds);
    ensure!(out.records.len() == 250, "{} records", out.records.len());
    for c in &out.report.cells {
        let want = if c.query_id == "Q-09" { 0.0 } else { 100.0 };
        ensure!(c.accuracy_pct == want, "{} at {}%", c.query_id, c.accuracy_pct);
    }
    let rq1 = csv_rows(&dir.path().join("rq1_accuracy.csv"))?;
    let rq2 = csv_rows(&dir.path().join("rq2_latency.csv"))?;
    let rq3 = csv_rows(&dir.path().join("rq3_tokens.csv"))?;
    ensure!((rq1.len(), rq2.len(), rq3.len()) == (25, 75, 25), "rows {} / {} / {}", rq1.len(), rq2.len(), rq3.len());
    for row in &rq1 {
        let want = if row[0] == "Q-09" { "0" } else { "100" };
        ensure!(row[1] == want, "rq1 row {row:?}");
    }
    for (i, chunk) in rq2.chunks(3).enumerate() {
        let metrics: Vec<&str> = chunk.iter().map(|r| r[1].as_str()).collect();
        ensure!(metrics == ["P-50", "P-90", "Max"], "rq2 query {i}: {metrics:?}");
    }
    Ok(format!("250 runs in {:.2}s", out.wall_seconds))
}

fn fault_differentiation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let st = state(dir.path(), Clock::fixed(TRACE_END));
    let suite: Vec<_> = builtin_suite().into_iter().filter(|q| q.id == "Q-24").collect();
    let cases = [
        (FaultKind::HallucinateDates, FailureKind::ToolMisuse),
        (FaultKind::Deflect, FailureKind::Deflection),
        (FaultKind::FlawedOrder, FailureKind::FlawedReasoning),
        (FaultKind::Truncate, FailureKind::Truncation),
    ];
    let mut seen = Vec::new();
    for (fault, kind) in cases {
        let mut cfg = SuiteRunConfig::new(suite.clone(), vec![Arc::new(ScriptedBackend::fault(fault))]);
        cfg.repetitions = 10;
        let records = run_benchmark(&cfg, &ToolRegistry::standard(), &st).map_err(|e| e.to_string())?;
        let cell = aggregate(&records).cells[0].clone();
        ensure!(cell.accuracy_pct == 0.0, "{fault}: accuracy {}%", cell.accuracy_pct);
        let kinds: Vec<FailureKind> = records.iter().map(|r| r.failure_kind).collect();
        ensure!(kinds.iter().all(|k| *k == kind), "{fault}: kinds {kinds:?}, want {kind}");
        seen.push(format!("{fault}->{kind}"));
    }
    Ok(seen.join(", "))
}

fn record(query: &str, rep: u32, success: bool) -> RunRecord {
    RunRecord {
        query_id: query.into(),
        category: Category::SR,
        backend_id: "b".into(),
        repetition: rep,
        wall_seconds: 1.0,
        prompt_tokens: 0,
        completion_tokens: 0,
        total_tokens: 0,
        token_source: None,
        success,
        failure_kind: if success { FailureKind::None } else { FailureKind::Hallucination },
        expectation_met: success,
        outcome: RunOutcome::Finished,
        final_answer: None,
        trace: AgentTrace::new(),
    }
}

fn accuracy_arithmetic() -> Outcome {
    let mut rs = Vec::new();
    for (q, ok) in [("Q-07", 3), ("Q-08", 0), ("Q-10", 10)] {
        rs.extend((1..=10).map(|i| record(q, i, i <= ok)));
    }
    let report = aggregate(&rs);
    let shown: Vec<String> = ["Q-07", "Q-08", "Q-10"]
        .iter()
        .map(|q| format_accuracy(report.cell(q, "b").unwrap().accuracy_pct))
        .collect();
    ensure!(shown == ["30", "0", "100"], "{shown:?}");
    Ok(shown.join(" / "))
}

/// Smallest 1-based rank k with k/n >= p/100, in integer arithmetic.
fn brute_percentile(xs: &[f64], p: u32) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as u32;
    let k = (1..=n).find(|k| k * 100 >= p * n).unwrap();
    s[k as usize - 1]
}

fn percentile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
        for p in 1..=100u32 {
            let got = percentile(&xs, p as f64).map_err(|e| e.to_string())?;
            ensure!(got == brute_percentile(&xs, p), "case {case} p{p}: {got}");
        }
    }
    let one_to_ten: Vec<f64> = (1..=10).map(f64::from).collect();
    ensure!(percentile(&one_to_ten, 50.0) == Ok(5.0), "P-50 of 1..10");
    ensure!(percentile(&one_to_ten, 90.0) == Ok(9.0), "P-90 of 1..10");
    Ok("1000 lists × 100 ranks".into())
}

fn brute_irate(s: &[(f64, f64)]) -> Vec<(f64, f64)> {
    s.windows(2)
        .map(|w| {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            let inc = if v1 < v0 { v1 } else { v1 - v0 };
            (t1, inc / (t1 - t0))
        })
        .collect()
}

fn irate_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut resets = 0;
    for case in 0..1000 {
        let n = rng.gen_range(0..60);
        let (mut t, mut v) = (1.7e9, 0.0);
        let mut s = Vec::new();
        for _ in 0..n {
            t += rng.gen_range(1..600) as f64;
            if rng.gen_bool(0.1) {
                v = rng.gen_range(0..100) as f64;
                resets += 1;
            } else {
                v += rng.gen_range(0..5000) as f64;
            }
            s.push((t, v));
        }
        let got = irate_points(&s).map_err(|e| e.to_string())?;
        ensure!(got == brute_irate(&s), "case {case}");
    }
    ensure!(resets > 0, "no reset generated");
    let simple = irate_points(&[(0.0, 0.0), (10.0, 50.0)]).map_err(|e| e.to_string())?;
    ensure!(simple == vec![(10.0, 5.0)], "{simple:?}");
    Ok(format!("1000 series, {resets} resets"))
}

fn random_line(rng: &mut impl Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJ0123456789 ,.'{}\"=_-";
    let n = rng.gen_range(1..40);
    let s: String = (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect();
    let s = s.trim().to_string();
    if s.is_empty() {
        "x".into()
    } else {
        s
    }
}

fn random_trace(rng: &mut impl Rng) -> AgentTrace {
    let mut t = AgentTrace::new();
    for _ in 0..rng.gen_range(0..6) {
        t.push(AgentEvent::Thought { text: random_line(rng) });
        let action: String = (0..rng.gen_range(1..20)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        t.push(AgentEvent::Action { action, input: random_line(rng) });
        t.push(AgentEvent::Observation { text: random_line(rng) });
    }
    t.push(AgentEvent::Thought { text: random_line(rng) });
    t.push(AgentEvent::FinalAnswer { text: random_line(rng) });
    t
}

/// Splits a rendered scratchpad at its observations and parses each chunk.
fn reparse(text: &str) -> Result<AgentTrace, String> {
    let mut trace = AgentTrace::new();
    let mut chunk = String::new();
    let flush = |chunk: &mut String, trace: &mut AgentTrace| -> Result<(), String> {
        if chunk.trim().is_empty() {
            return Ok(());
        }
        match parse_step(chunk) {
            ParsedStep::ToolCall { thought, action_name, input_text } => {
                trace.push(AgentEvent::Thought { text: thought });
                trace.push(AgentEvent::Action { action: action_name, input: input_text });
            }
            ParsedStep::Finish { thought, final_answer } => {
                trace.push(AgentEvent::Thought { text: thought });
                trace.push(AgentEvent::FinalAnswer { text: final_answer });
            }
            ParsedStep::Malformed { raw, .. } => return Err(format!("malformed chunk {raw:?}")),
        }
        chunk.clear();
        Ok(())
    };
    for line in text.lines() {
        if let Some(obs) = line.strip_prefix("Observation: ") {
            flush(&mut chunk, &mut trace)?;
            trace.push(AgentEvent::Observation { text: obs.into() });
        } else {
            chunk.push_str(line);
            chunk.push('\n');
        }
    }
    flush(&mut chunk, &mut trace)?;
    Ok(trace)
}

fn parser_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let t = random_trace(&mut rng);
        let text = render_scratchpad(&t).map_err(|e| e.to_string())?;
        let back = reparse(&text)?;
        ensure!(back == t, "round trip {case} differs");
    }
    let markers = ["", "Action: ", "Action Input: ", "Final Answer: ", "Thought: ", "\n"];
    for case in 0..1000 {
        let mut s = String::new();
        for _ in 0..rng.gen_range(0..12) {
            if rng.gen_bool(0.3) {
                s.push_str(markers[rng.gen_range(0..markers.len())]);
            } else {
                let n = rng.gen_range(0..20);
                s.extend((0..n).map(|_| char::from_u32(rng.gen_range(1..0x2FF)).unwrap_or('?')));
            }
        }
        let parsed = catch_unwind(|| parse_step(&s)).map_err(|_| format!("fuzz case {case} panicked on {s:?}"))?;
        if let ParsedStep::ToolCall { action_name, .. } = parsed {
            ensure!(!action_name.is_empty(), "empty action from {s:?}");
        }
    }
    let step3 = "Action: Summarize_Services_Information_In_OpenShift_Namespace\nAction Input: {\"namespace\": \"demo\"}";
    match parse_step(step3) {
        ParsedStep::ToolCall { action_name, input_text, .. } => {
            ensure!(action_name == "Summarize_Services_Information_In_OpenShift_Namespace", "{action_name}");
            ensure!(input_text == "{\"namespace\": \"demo\"}", "{input_text}");
        }
        other => return Err(format!("step 3 parsed as {other:?}")),
    }
    let step10 = format!("I now know the final answer\nFinal Answer: {Q24_FILE}");
    match parse_step(&step10) {
        ParsedStep::Finish { thought, final_answer } => {
            ensure!(thought == "I now know the final answer", "{thought}");
            ensure!(final_answer == Q24_FILE, "{final_answer}");
        }
        other => return Err(format!("step 10 parsed as {other:?}")),
    }
    Ok("1000 round trips, 1000 fuzz inputs, 2 reference steps".into())
}

fn mlasp_band() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut hits = 0;
    for _ in 0..100 {
        let target = rng.gen_range(50.0..400.0);
        let precision = rng.gen_range(0.5..10.0);
        let seed: u64 = rng.gen();
        let out = mlasp_search(target, precision, 100, seed)?;
        if out.within_precision {
            hits += 1;
            let err = (out.predicted_kpi - target).abs();
            ensure!(err <= target * precision / 100.0, "kpi {} for target {target} ±{precision}%", out.predicted_kpi);
        }
    }
    let (lo, hi) = (307.0 - 307.0 * 0.029, 307.0 + 307.0 * 0.029);
    ensure!((lo - 298.097f64).abs() < 1e-9 && (hi - 315.903f64).abs() < 1e-9, "band [{lo}, {hi}]");
    // Probe a hair inside and outside each edge; the edges themselves are
    // not exact in binary floating point.
    ensure!(within_band(298.0971, 307.0, 2.9) && within_band(315.9029, 307.0, 2.9), "band too narrow");
    ensure!(!within_band(298.0969, 307.0, 2.9) && !within_band(315.9031, 307.0, 2.9), "band too wide");
    Ok(format!("{hits}/100 in band; Q-23 band [298.097, 315.903]"))
}

/// The prompt template, written out independently of the library's copy.
const TEMPLATE_LINES: &[&str] = &[
    "Answer the following questions as best you can. ",
    "You have access to the following tools:",
    "",
    "{tools}",
    "",
    "Use the following format:",
    "",
    "Question: the input question you must answer",
    "Thought: you should always think about what to do",
    "Action: the action to take, should be one of ",
    "[{tool_names}]",
    "Action Input: the input to the action",
    "Observation: the result of the action",
    "... (this Thought/Action/Action Input/Observation ",
    "can repeat N times)",
    "Thought: I now know the final answer",
    "Final Answer: the final answer to the original input ",
    "question",
    "",
    "Begin!",
    "",
    "Question: {input}",
    "Thought:{agent_scratchpad}",
];

fn prompt_fidelity() -> Outcome {
    let registry = ToolRegistry::standard();
    let render = registry.render();
    let prompt = build_prompt(&render, "What time is it?", "", None);
    let expected = TEMPLATE_LINES
        .join("\n")
        .replace("{tools}", &render.tools_block)
        .replace("{tool_names}", &render.tool_names_block)
        .replace("{input}", "What time is it?")
        .replace("{agent_scratchpad}", "");
    ensure!(prompt == expected, "prompt differs from template:\n{prompt}");
    ensure!(prompt.starts_with("Answer the following questions as best you can."), "opening line");
    ensure!(prompt.ends_with("\nThought:"), "trailing Thought:");
    Ok(format!("{} bytes, byte-exact", prompt.len()))
}

fn main() {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("golden end-to-end Q-24", golden_q24),
        ("full golden sweep", golden_sweep),
        ("fault-injection differentiation", fault_differentiation),
        ("accuracy arithmetic", accuracy_arithmetic),
        ("percentile oracle", percentile_oracle),
        ("irate oracle", irate_oracle),
        ("parser properties", parser_properties),
        ("MLASP band", mlasp_band),
        ("prompt fidelity", prompt_fidelity),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                println!("FAIL  {name} ({secs:.2}s): {why}");
                failed.push(*name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
