//! Golden policy: a pure function from prompt text to the next correct
//! ReAct step. It reads the question, the tool list and the scratchpad out
//! of the prompt, recognises the task with a few regexes and drives the
//! tools the way a well-behaved model would.

use std::sync::LazyLock;

use chrono::DateTime;
use regex::Regex;

use crate::react::split_at_begin;

pub(crate) const T1: &str = "Generate_Capacity_Configuration_With_MLASP";
pub(crate) const T2: &str = "Search_OpenShift_AI_Documentation";
pub(crate) const T3: &str = "Get_timestamp_and_time_ISO";
pub(crate) const T4: &str = "List_OpenShift_Operators";
pub(crate) const T5: &str = "Summarize_Pods_Information_In_OpenShift_Namespace";
pub(crate) const T6: &str = "Summarize_Services_Information_In_OpenShift_Namespace";
pub(crate) const T7: &str = "List_Prometheus_Metrics_Names_Using_A_Filter";
pub(crate) const T8: &str = "List_metric_values_between_a_timestamp_range";
pub(crate) const T9: &str = "File_create_plot_irate";

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static regex")
}

/// A completed Action/Observation pair from the scratchpad.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Step {
    pub action: String,
    pub input: String,
    pub observation: String,
}

/// What the policy can read from a prompt.
#[derive(Debug, Clone, Default)]
pub(crate) struct PromptView {
    pub question: String,
    pub memory: Option<String>,
    /// `(action_name, description)` from the tools block.
    pub tools: Vec<(String, String)>,
    pub steps: Vec<Step>,
    /// Observation blocks after `Begin!`, including corrective ones.
    pub observations: usize,
}

pub(crate) fn view(prompt: &str) -> PromptView {
    let (head, tail) = split_at_begin(prompt);
    let tail = tail.strip_prefix('\n').unwrap_or(tail);
    let (question, pad) = match tail.find("\nThought:") {
        Some(i) => (&tail[..i], &tail[i + "\nThought:".len()..]),
        None => (tail, ""),
    };
    let question = question.strip_prefix("Question: ").unwrap_or(question).trim().to_string();

    let memory = head
        .find("Previous conversation:\n")
        .map(|i| head[i + "Previous conversation:\n".len()..].trim().to_string());

    let tools = head
        .split_once("You have access to the following tools:\n\n")
        .and_then(|(_, rest)| rest.split_once("\n\nUse the following format:"))
        .map(|(block, _)| {
            block
                .lines()
                .filter_map(|l| l.split_once(": "))
                .map(|(name, rest)| {
                    let desc = rest.rfind(" Args: ").map_or(rest, |i| &rest[..i]);
                    (name.to_string(), desc.to_string())
                })
                .collect()
        })
        .unwrap_or_default();

    #[derive(PartialEq)]
    enum Mode {
        None,
        Input,
        Obs,
    }
    let mut steps = Vec::new();
    let mut observations = 0;
    let mut cur: Option<Step> = None;
    let mut mode = Mode::None;
    let flush = |cur: &mut Option<Step>, steps: &mut Vec<Step>| {
        if let Some(s) = cur.take() {
            if !s.action.is_empty() {
                steps.push(s);
            }
        }
    };
    for line in pad.lines() {
        if let Some(r) = line.strip_prefix("Action: ") {
            flush(&mut cur, &mut steps);
            cur = Some(Step {
                action: r.trim().to_string(),
                ..Step::default()
            });
            mode = Mode::None;
        } else if let Some(r) = line.strip_prefix("Action Input: ") {
            if let Some(s) = cur.as_mut() {
                s.input = r.to_string();
            }
            mode = Mode::Input;
        } else if let Some(r) = line.strip_prefix("Observation: ") {
            observations += 1;
            match cur.as_mut() {
                Some(s) => s.observation = r.to_string(),
                None => cur = Some(Step::default()),
            }
            mode = Mode::Obs;
        } else if line.starts_with("Thought:") || line.starts_with("Final Answer:") {
            flush(&mut cur, &mut steps);
            mode = Mode::None;
        } else if let Some(s) = cur.as_mut() {
            match mode {
                Mode::Obs => {
                    s.observation.push('\n');
                    s.observation.push_str(line);
                }
                Mode::Input => {
                    s.input.push('\n');
                    s.input.push_str(line);
                }
                Mode::None => {}
            }
        }
    }
    flush(&mut cur, &mut steps);
    PromptView {
        question,
        memory,
        tools,
        steps,
        observations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PodStyle {
    Overview,
    ServicesAndRoutes,
    Complete,
    NamesAndRoutes,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Window {
    pub namespace: String,
    pub metric: String,
    pub amount: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Intent {
    Identity,
    ListTools { describe: bool },
    Operators { namespace: String, name_version_only: bool },
    Docs,
    Describe { subject: String },
    River,
    Pods { namespace: String, style: PodStyle },
    Today,
    CurrentIso,
    CurrentTimestamp,
    Relative { amount: String, unit: String, ago: bool },
    PromService { namespace: String },
    PromMetrics { namespace: String, prefix: Option<String> },
    Mlasp { target: String, precision: String, epochs: String },
    Plot(Window),
    Csv(Window),
    Unknown,
}

impl Intent {
    pub fn uses_tools(&self) -> bool {
        !matches!(
            self,
            Intent::Identity | Intent::ListTools { .. } | Intent::Describe { .. } | Intent::River | Intent::Unknown
        )
    }

    /// Tasks that chain several tools.
    pub fn is_multi_tool(&self) -> bool {
        matches!(self, Intent::PromMetrics { .. } | Intent::Plot(_) | Intent::Csv(_))
    }
}

static NAMESPACE: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\bnamespace\s+([a-z0-9](?:[-a-z0-9]*[a-z0-9])?)"));
static WINDOW: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)\bmetric\s+([A-Za-z_:][A-Za-z0-9_:]*)\s+starting\s+(\d+(?:\.\d+)?)\s+(second|minute|hour|day)s?\s+ago")
});
static RELATIVE: LazyLock<Regex> =
    LazyLock::new(|| re(r"(?i)\b(\d+(?:\.\d+)?)\s+(second|minute|hour|day)s?\s+(ago|from now)"));
static KPI: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\bkpi\s+of\s+(\d+(?:\.\d+)?)"));
static PRECISION: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)(\d+(?:\.\d+)?)\s*(?:percent|%)"));
static EPOCHS: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)(\d+)\s+epochs"));
static PREFIX: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)starts?\s+with\s+([A-Za-z_:][A-Za-z0-9_:]*)"));
static DESCRIBE: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\bdescribe\s+([A-Z][\w-]*)"));

pub(crate) fn classify(question: &str) -> Intent {
    let q = question.to_lowercase();
    let namespace = || {
        NAMESPACE
            .captures(question)
            .map(|c| c[1].to_string())
            .unwrap_or_else(|| "default".to_string())
    };
    let window = || {
        WINDOW.captures(question).map(|c| Window {
            namespace: namespace(),
            metric: c[1].to_string(),
            amount: c[2].to_string(),
            unit: format!("{}s", c[3].to_lowercase()),
        })
    };
    if q.contains("plot") {
        if let Some(w) = window() {
            return Intent::Plot(w);
        }
    }
    if q.contains("csv") {
        if let Some(w) = window() {
            return Intent::Csv(w);
        }
    }
    if q.contains("prometheus") && q.contains("metrics") {
        return Intent::PromMetrics {
            namespace: namespace(),
            prefix: PREFIX.captures(question).map(|c| c[1].to_string()),
        };
    }
    if q.contains("prometheus service") {
        return Intent::PromService { namespace: namespace() };
    }
    if let Some(c) = KPI.captures(question) {
        return Intent::Mlasp {
            target: c[1].to_string(),
            precision: PRECISION.captures(question).map_or("5".into(), |c| c[1].to_string()),
            epochs: EPOCHS.captures(question).map_or("100".into(), |c| c[1].to_string()),
        };
    }
    if let Some(c) = RELATIVE.captures(question) {
        return Intent::Relative {
            amount: c[1].to_string(),
            unit: format!("{}s", c[2].to_lowercase()),
            ago: c[3].eq_ignore_ascii_case("ago"),
        };
    }
    if q.contains("day is today") || q.contains("day is it") {
        return Intent::Today;
    }
    if q.contains("current date time") || q.contains("current date and time") || q.contains("current datetime") {
        return Intent::CurrentIso;
    }
    if q.contains("current timestamp") {
        return Intent::CurrentTimestamp;
    }
    if q.contains("pods") {
        let style = if q.contains("route") && q.contains("only") {
            PodStyle::NamesAndRoutes
        } else if q.contains("service") || q.contains("route") {
            PodStyle::ServicesAndRoutes
        } else if q.contains("complete") {
            PodStyle::Complete
        } else {
            PodStyle::Overview
        };
        return Intent::Pods {
            namespace: namespace(),
            style,
        };
    }
    if q.contains("operators") {
        return Intent::Operators {
            namespace: namespace(),
            name_version_only: q.contains("only the name"),
        };
    }
    if q.contains("how can i") || q.contains("how do i") || q.contains("documentation") {
        return Intent::Docs;
    }
    if q.contains("river") {
        return Intent::River;
    }
    if let Some(c) = DESCRIBE.captures(question) {
        return Intent::Describe { subject: c[1].to_string() };
    }
    if q.contains("tools") {
        return Intent::ListTools {
            describe: q.contains("description"),
        };
    }
    if q.contains("who are you") {
        return Intent::Identity;
    }
    Intent::Unknown
}

/// Flat JSON object rendered with `", "` / `": "` separators. Numbers are
/// passed as raw tokens so timestamps keep their exact digits.
pub(crate) enum Arg {
    S(String),
    N(String),
}

pub(crate) fn json_args(pairs: &[(&str, Arg)]) -> String {
    let parts: Vec<String> = pairs
        .iter()
        .map(|(k, v)| {
            let v = match v {
                Arg::S(s) => serde_json::to_string(s).expect("string serializes"),
                Arg::N(n) => n.clone(),
            };
            format!("\"{k}\": {v}")
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn s(v: &str) -> Arg {
    Arg::S(v.to_string())
}

fn n(v: &str) -> Arg {
    Arg::N(v.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Reply {
    Act { thought: String, action: String, input: String },
    Final { answer: String },
}

impl Reply {
    pub fn render(&self) -> String {
        match self {
            Reply::Act { thought, action, input } => {
                format!("Thought: {thought}\nAction: {action}\nAction Input: {input}")
            }
            Reply::Final { answer } => format!("Thought: I now know the final answer\nFinal Answer: {answer}"),
        }
    }
}

fn act(thought: impl Into<String>, action: &str, input: String) -> Reply {
    Reply::Act {
        thought: thought.into(),
        action: action.to_string(),
        input,
    }
}

fn fin(answer: impl Into<String>) -> Reply {
    Reply::Final { answer: answer.into() }
}

// ---- observation readers ----

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Svc {
    pub name: String,
    pub ports: Vec<(String, String)>,
    pub route: String,
}

static SERVICE: LazyLock<Regex> =
    LazyLock::new(|| re(r"ServiceInfo \(name = '([^']*)', ports = \[(.*?)\], route = '([^']*)'\)"));
static PORT: LazyLock<Regex> = LazyLock::new(|| re(r"PortInfo \(port = (\d+), name = '([^']*)'"));
static OPERATOR: LazyLock<Regex> =
    LazyLock::new(|| re(r"OperatorInfo \(name = '([^']*)', version = '([^']*)', status = '([^']*)'\)"));
static COUNTS: LazyLock<Regex> =
    LazyLock::new(|| re(r"pod_counts = \{Running: (\d+), Succeeded: (\d+), Pending: (\d+), Failed: (\d+)\}"));
static TIMESTAMP: LazyLock<Regex> = LazyLock::new(|| re(r"timestamp = ([0-9.]+)"));
static ISO: LazyLock<Regex> = LazyLock::new(|| re(r"date_time_iso_format_string = '([^']*)'"));
static ZONE: LazyLock<Regex> = LazyLock::new(|| re(r"timezone = '([^']*)'"));
static QUOTED: LazyLock<Regex> = LazyLock::new(|| re(r"'([^']*)'"));
static FILE_NAME: LazyLock<Regex> = LazyLock::new(|| re(r"file_name='([^']*)'"));

pub(crate) fn services(obs: &str) -> Vec<Svc> {
    SERVICE
        .captures_iter(obs)
        .map(|c| Svc {
            name: c[1].to_string(),
            ports: PORT.captures_iter(&c[2]).map(|p| (p[1].to_string(), p[2].to_string())).collect(),
            route: c[3].to_string(),
        })
        .collect()
}

/// The Prometheus service and the port it serves its API on.
pub(crate) fn prometheus(obs: &str) -> Option<(String, String)> {
    let svc = services(obs).into_iter().find(|s| s.name.contains("prometheus"))?;
    let port = svc
        .ports
        .iter()
        .find(|(_, name)| name == "web")
        .or_else(|| svc.ports.first())?
        .0
        .clone();
    Some((svc.name, port))
}

struct Pod {
    name: String,
    services: Vec<Svc>,
}

fn pods(obs: &str) -> Vec<Pod> {
    obs.split("PodInfo (name = '")
        .skip(1)
        .map(|seg| Pod {
            name: seg.split('\'').next().unwrap_or_default().to_string(),
            services: services(seg),
        })
        .collect()
}

struct TimeObs {
    timestamp: String,
    iso: String,
    zone: String,
}

fn time_obs(obs: &str) -> Option<TimeObs> {
    Some(TimeObs {
        timestamp: TIMESTAMP.captures(obs)?[1].to_string(),
        iso: ISO.captures(obs)?[1].to_string(),
        zone: ZONE.captures(obs).map(|c| c[1].to_string()).unwrap_or_default(),
    })
}

fn list_words(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

// ---- the policy ----

pub(crate) fn failed(obs: &str) -> bool {
    obs.starts_with("Error:")
}

fn steps_of<'a>(v: &'a PromptView, action: &str) -> Vec<&'a Step> {
    v.steps.iter().filter(|s| s.action == action).collect()
}

pub(crate) fn now_args() -> String {
    json_args(&[("time_value", s("now")), ("time_metric", s("seconds")), ("ago_flag", n("0"))])
}

pub(crate) fn golden_reply(v: &PromptView) -> Reply {
    if let Some(last) = v.steps.last() {
        if failed(&last.observation) {
            let msg = last.observation.trim_start_matches("Error:").trim();
            return fin(format!("I could not complete the request because the tool {} reported an error: {msg}", last.action));
        }
    }
    let intent = classify(&v.question);
    match intent {
        Intent::Identity => fin(
            "I am an AI assistant for IT operations on Red Hat OpenShift. I can inspect namespaces, pods, services, operators and Prometheus metrics, compute timestamps, search the OpenShift AI documentation and suggest capacity configurations.",
        ),
        Intent::ListTools { describe } => {
            if describe {
                let lines: Vec<String> = v.tools.iter().map(|(n, d)| format!("- {n}: {d}")).collect();
                fin(format!("I have access to the following tools:\n{}", lines.join("\n")))
            } else {
                let names: Vec<String> = v.tools.iter().map(|(n, _)| n.clone()).collect();
                fin(format!("I have access to the following tools: {}.", names.join(", ")))
            }
        }
        Intent::Describe { subject } => fin(if subject.eq_ignore_ascii_case("paris") {
            "Paris, the capital of France, sits on the Seine river. Known as the City of Light, it is famous for the Eiffel Tower, the Louvre, Notre-Dame and its cafés, fashion houses and wide boulevards. It is a world centre of art, cuisine and culture, and its neighbourhoods, from Montmartre to the Latin Quarter, attract millions of visitors every year.".to_string()
        } else {
            format!("{subject} is a place I can only describe in general terms without more context.")
        }),
        Intent::River => {
            let about_paris = v.memory.as_deref().is_some_and(|m| m.contains("Paris"));
            fin(if about_paris {
                "Yes. Paris is crossed by the Seine river, which flows through the heart of the city."
            } else {
                "I do not have enough context to answer: the question does not say which place you mean. Please tell me the location you are asking about."
            })
        }
        Intent::Unknown => fin("I am not sure how to help with that using the tools I have."),
        Intent::Docs => match steps_of(v, T2).last() {
            None => act(
                "This is a how-to question about OpenShift AI, so I should search the documentation.",
                T2,
                json_args(&[("query", s(&v.question))]),
            ),
            Some(step) => {
                let top = step
                    .observation
                    .split("\n\n[")
                    .next()
                    .unwrap_or_default()
                    .lines()
                    .filter(|l| !l.starts_with('[') && !l.starts_with("low confidence"))
                    .collect::<Vec<_>>()
                    .join("\n");
                fin(format!("According to the OpenShift AI documentation:\n{}", top.trim()))
            }
        },
        Intent::Operators { namespace, name_version_only } => match steps_of(v, T4).last() {
            None => act(
                format!("I need to list the operators installed in the namespace {namespace}."),
                T4,
                json_args(&[("namespace", s(&namespace))]),
            ),
            Some(step) => {
                let ops: Vec<String> = OPERATOR
                    .captures_iter(&step.observation)
                    .map(|c| {
                        if name_version_only {
                            format!("{} (version {})", &c[1], &c[2])
                        } else {
                            format!("{} (version {}, status {})", &c[1], &c[2], &c[3])
                        }
                    })
                    .collect();
                if ops.is_empty() {
                    fin(format!("There are no operators installed in namespace {namespace}."))
                } else {
                    fin(format!("The operators in namespace {namespace} are: {}.", list_words(&ops)))
                }
            }
        },
        Intent::Pods { namespace, style } => match steps_of(v, T5).last() {
            None => act(
                format!("I need a summary of the pods in the namespace {namespace}."),
                T5,
                json_args(&[("namespace", s(&namespace))]),
            ),
            Some(step) => fin(pod_answer(&namespace, style, &step.observation)),
        },
        Intent::Today | Intent::CurrentIso | Intent::CurrentTimestamp => match steps_of(v, T3).last() {
            None => act("I need the current time information.", T3, now_args()),
            Some(step) => match time_obs(&step.observation) {
                None => fin(format!("The time tool returned: {}", step.observation)),
                Some(t) => fin(match intent {
                    Intent::Today => {
                        let (date, weekday) = date_and_weekday(&t.iso);
                        format!("Today is {weekday}, {date}.")
                    }
                    Intent::CurrentIso => format!("The current date time is {} ({}).", t.iso, t.zone),
                    _ => format!("The current timestamp is {}.", t.timestamp),
                }),
            },
        },
        Intent::Relative { amount, unit, ago } => match steps_of(v, T3).last() {
            None => act(
                format!("I need the time information for {amount} {unit} {}.", if ago { "ago" } else { "from now" }),
                T3,
                json_args(&[
                    ("time_value", n(&amount)),
                    ("time_metric", s(&unit)),
                    ("ago_flag", n(if ago { "1" } else { "0" })),
                ]),
            ),
            Some(step) => match time_obs(&step.observation) {
                None => fin(format!("The time tool returned: {}", step.observation)),
                Some(t) => fin(format!(
                    "For {amount} {unit} {} the timestamp is {} and the date time is {} ({}).",
                    if ago { "ago" } else { "from now" },
                    t.timestamp,
                    t.iso,
                    t.zone
                )),
            },
        },
        Intent::PromService { namespace } => match steps_of(v, T6).last() {
            None => act(
                format!("I need the services of the namespace {namespace} to find the Prometheus service."),
                T6,
                json_args(&[("namespace", s(&namespace))]),
            ),
            Some(step) => match services(&step.observation).into_iter().find(|s| s.name.contains("prometheus")) {
                None => fin(format!("No, there is no Prometheus service running in namespace {namespace}.")),
                Some(svc) => {
                    let ports: Vec<String> = svc.ports.iter().map(|(p, name)| format!("{p} ({name})")).collect();
                    fin(format!(
                        "Yes, the Prometheus service in namespace {namespace} is {} with ports {}.",
                        svc.name,
                        list_words(&ports)
                    ))
                }
            },
        },
        Intent::PromMetrics { namespace, prefix } => {
            let Some(svc_step) = steps_of(v, T6).last().copied() else {
                return act(
                    format!("First I need the Prometheus service name and port in the namespace {namespace}."),
                    T6,
                    json_args(&[("namespace", s(&namespace))]),
                );
            };
            let Some((svc, port)) = prometheus(&svc_step.observation) else {
                return fin(format!("There is no Prometheus service running in namespace {namespace}."));
            };
            match steps_of(v, T7).last() {
                None => act(
                    format!("The Prometheus service is {svc} on port {port}. Now I can list the metrics filtered by namespace {namespace}."),
                    T7,
                    json_args(&[
                        ("filter_name", s("namespace")),
                        ("filter_value", s(&namespace)),
                        ("prom_service", s(&svc)),
                        ("prom_namespace", s(&namespace)),
                        ("prom_port", n(&port)),
                    ]),
                ),
                Some(step) => {
                    let names: Vec<String> = QUOTED
                        .captures_iter(&step.observation)
                        .map(|c| c[1].to_string())
                        .filter(|m| prefix.as_deref().is_none_or(|p| m.starts_with(p)))
                        .collect();
                    let which = match &prefix {
                        Some(p) => format!("metrics whose name starts with {p}"),
                        None => format!("metrics filtered by namespace {namespace}"),
                    };
                    fin(format!(
                        "The Prometheus service is {svc} on port {port}. The {which} are: {}.",
                        if names.is_empty() { "none".to_string() } else { names.join(", ") }
                    ))
                }
            }
        }
        Intent::Mlasp { target, precision, epochs } => match steps_of(v, T1).last() {
            None => act(
                format!("I should search for a WireMock configuration supporting a KPI of {target} within {precision} percent, for {epochs} epochs."),
                T1,
                json_args(&[
                    ("target_kpi", n(&target)),
                    ("precision_pct", n(&precision)),
                    ("epochs", n(&epochs)),
                ]),
            ),
            Some(step) => fin(if step.observation.starts_with("within_precision = true") {
                format!("A configuration supporting the requested KPI was found: {}", step.observation)
            } else {
                format!("No configuration within the requested precision was found; the closest one is: {}", step.observation)
            }),
        },
        Intent::Plot(w) => window_task(v, &w, false),
        Intent::Csv(w) => window_task(v, &w, true),
    }
}

fn date_and_weekday(iso: &str) -> (String, String) {
    match DateTime::parse_from_rfc3339(iso) {
        Ok(dt) => (dt.format("%Y-%m-%d").to_string(), dt.format("%A").to_string()),
        Err(_) => (iso.to_string(), "today".to_string()),
    }
}

fn pod_answer(namespace: &str, style: PodStyle, obs: &str) -> String {
    let pods = pods(obs);
    let names: Vec<String> = pods.iter().map(|p| p.name.clone()).collect();
    let route_of = |p: &Pod| {
        p.services
            .iter()
            .find(|s| s.route != "unavailable")
            .map(|s| s.route.clone())
    };
    let counts = COUNTS.captures(obs).map(|c| {
        format!(
            "Running: {}, Succeeded: {}, Pending: {}, Failed: {}",
            &c[1], &c[2], &c[3], &c[4]
        )
    });
    match style {
        PodStyle::Overview => format!(
            "Namespace {namespace} has {} running pods: {}.",
            pods.len(),
            if names.is_empty() { "none".into() } else { list_words(&names) }
        ),
        PodStyle::NamesAndRoutes => {
            let lines: Vec<String> = pods
                .iter()
                .map(|p| match route_of(p) {
                    Some(r) => format!("- {}: {r}", p.name),
                    None => format!("- {}: no route", p.name),
                })
                .collect();
            format!("Running pods in namespace {namespace}:\n{}", lines.join("\n"))
        }
        PodStyle::ServicesAndRoutes | PodStyle::Complete => {
            let lines: Vec<String> = pods
                .iter()
                .map(|p| {
                    let svcs: Vec<String> = p
                        .services
                        .iter()
                        .map(|s| {
                            let ports: Vec<String> = s.ports.iter().map(|(n, name)| format!("{n}/{name}")).collect();
                            format!("service {} (ports {}, route {})", s.name, ports.join(", "), s.route)
                        })
                        .collect();
                    if svcs.is_empty() {
                        format!("- {}: no services", p.name)
                    } else {
                        format!("- {}: {}", p.name, svcs.join("; "))
                    }
                })
                .collect();
            let head = match (style, &counts) {
                (PodStyle::Complete, Some(c)) => format!("Pods in namespace {namespace} by state: {c}.\n"),
                _ => String::new(),
            };
            format!("{head}Running pods in namespace {namespace}:\n{}", lines.join("\n"))
        }
    }
}

/// Prometheus service → current time → start time → plot or CSV.
fn window_task(v: &PromptView, w: &Window, csv: bool) -> Reply {
    let ns = &w.namespace;
    let Some(svc_step) = steps_of(v, T6).last().copied() else {
        return act(
            format!(
                "To solve the question, I need to first identify the Prometheus service name and port number in the \"{ns}\" namespace. Then, I will use this information to get the metric data for \"{}\" from {} {} ago until now.",
                w.metric, w.amount, w.unit
            ),
            T6,
            json_args(&[("namespace", s(ns))]),
        );
    };
    let Some((svc, port)) = prometheus(&svc_step.observation) else {
        return fin(format!("There is no Prometheus service running in namespace {ns}."));
    };
    let times = steps_of(v, T3);
    if times.is_empty() {
        return act(
            format!("From the observation, the Prometheus service in the \"{ns}\" namespace is named \"{svc}\" and it uses port {port}. Next, I need to get the current time and the time {} {} ago to define the time range.", w.amount, w.unit),
            T3,
            now_args(),
        );
    }
    if times.len() == 1 {
        return act(
            format!("Now I have the current timestamp. Next, I need to calculate the timestamp for {} {} ago.", w.amount, w.unit),
            T3,
            json_args(&[
                ("time_value", n(&w.amount)),
                ("time_metric", s(&w.unit)),
                ("ago_flag", n("1")),
            ]),
        );
    }
    let (Some(end), Some(start)) = (time_obs(&times[0].observation), time_obs(&times[1].observation)) else {
        return fin("The time tool did not return usable timestamps.");
    };
    let tool = if csv { T8 } else { T9 };
    match steps_of(v, tool).last() {
        None => {
            let mut args = vec![
                ("prom_service", s(&svc)),
                ("prom_namespace", s(ns)),
                ("prom_port", n(&port)),
                ("metric_name", s(&w.metric)),
                ("metric_range_start", n(&start.timestamp)),
                ("metric_range_end", n(&end.timestamp)),
            ];
            if csv {
                args.push(("format", s("csv")));
            }
            act(
                format!(
                    "Now I have the timestamp for {} {} ago. With both timestamps, I can proceed to {} the metric data for \"{}\" using the Prometheus service details.",
                    w.amount,
                    w.unit,
                    if csv { "retrieve" } else { "plot" },
                    w.metric
                ),
                tool,
                json_args(&args),
            )
        }
        Some(step) if csv => fin(step.observation.clone()),
        Some(step) => match FILE_NAME.captures(&step.observation) {
            Some(c) => fin(c[1].to_string()),
            None => fin(step.observation.clone()),
        },
    }
}

/// Next completion for `prompt` under the golden policy.
pub fn golden_step(prompt: &str) -> String {
    golden_reply(&view(prompt)).render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::react::build_prompt;
    use crate::tools::ToolRegistry;

    const Q24: &str = "Find out the Prometheus service name and port number running in namespace demo. Use it to to plot all the prometheus metric data for the metric load_generator_total_msg starting 48 hours ago until now. Return only the content string of the tool and nothing else.";

    fn prompt(question: &str, pad: &str) -> String {
        build_prompt(&ToolRegistry::standard().render(), question, pad, None)
    }

    #[test]
    fn first_q24_step_asks_for_services() {
        let out = golden_step(&prompt(Q24, ""));
        assert!(out.starts_with("Thought:"));
        assert!(out.contains("\nAction: Summarize_Services_Information_In_OpenShift_Namespace\nAction Input: {\"namespace\": \"demo\"}"));
    }

    #[test]
    fn view_reads_tools_and_steps() {
        let pad = "Thought: x\nAction: A\nAction Input: {\"a\": 1}\nObservation: line one\nline two\nThought: y\nAction: B\nAction Input: {}\nObservation: Error: nope\n";
        let v = view(&prompt("q?", pad));
        assert_eq!(v.question, "q?");
        assert_eq!(v.tools.len(), 9);
        assert_eq!(v.tools[2].0, T3);
        assert!(!v.tools[2].1.contains("Args:"));
        assert_eq!(v.steps.len(), 2);
        assert_eq!(v.steps[0].observation, "line one\nline two");
        assert_eq!(v.observations, 2);
        assert!(golden_step(&prompt("q?", pad)).contains("Final Answer: I could not complete"));
    }

    #[test]
    fn classification_of_suite_questions() {
        let suite = crate::suite::builtin_suite();
        let intent = |id: &str| classify(&crate::suite::find(&suite, id).unwrap().text);
        assert_eq!(intent("Q-01"), Intent::Identity);
        assert_eq!(intent("Q-04"), Intent::ListTools { describe: true });
        assert!(matches!(intent("Q-06"), Intent::Operators { name_version_only: true, .. }));
        assert_eq!(intent("Q-07"), Intent::Docs);
        assert!(matches!(intent("Q-08"), Intent::Describe { .. }));
        assert_eq!(intent("Q-09"), Intent::River);
        assert!(matches!(intent("Q-11"), Intent::Pods { style: PodStyle::ServicesAndRoutes, .. }));
        assert!(matches!(intent("Q-12"), Intent::Pods { style: PodStyle::Complete, .. }));
        assert!(matches!(intent("Q-13"), Intent::Pods { style: PodStyle::NamesAndRoutes, .. }));
        assert_eq!(intent("Q-14"), Intent::Today);
        assert_eq!(intent("Q-15"), Intent::CurrentIso);
        assert_eq!(intent("Q-16"), Intent::CurrentTimestamp);
        assert!(matches!(intent("Q-18"), Intent::Relative { ago: false, .. }));
        assert!(matches!(intent("Q-20"), Intent::PromService { .. }));
        assert!(matches!(intent("Q-22"), Intent::PromMetrics { prefix: Some(_), .. }));
        assert!(matches!(intent("Q-23"), Intent::Mlasp { .. }));
        assert!(matches!(intent("Q-24"), Intent::Plot(Window { ref unit, .. }) if unit == "days"));
        assert!(matches!(intent("Q-25"), Intent::Csv(_)));
    }

    #[test]
    fn golden_is_pure() {
        let p = prompt(Q24, "");
        assert_eq!(golden_step(&p), golden_step(&p));
    }

    #[test]
    fn json_args_python_style() {
        assert_eq!(
            json_args(&[("time_value", n("48")), ("time_metric", s("hours")), ("ago_flag", n("1"))]),
            r#"{"time_value": 48, "time_metric": "hours", "ago_flag": 1}"#
        );
    }
}
