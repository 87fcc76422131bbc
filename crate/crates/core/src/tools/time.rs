use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::{quoted, Tool, ToolArgs, ToolContext, ToolResult};
use crate::domain::{FieldKind, InputField, ToolId, ToolSpec};
use crate::sim::Clock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeValue {
    Now,
    Amount(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Seconds,
    Minutes,
    Hours,
    Days,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Minutes => 60.0,
            TimeUnit::Hours => 3600.0,
            TimeUnit::Days => 86400.0,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "seconds" => Ok(TimeUnit::Seconds),
            "minutes" => Ok(TimeUnit::Minutes),
            "hours" => Ok(TimeUnit::Hours),
            "days" => Ok(TimeUnit::Days),
            other => Err(format!(
                "unknown time_metric `{other}` (expected seconds, minutes, hours or days)"
            )),
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TimeUnit::Seconds => "seconds",
            TimeUnit::Minutes => "minutes",
            TimeUnit::Hours => "hours",
            TimeUnit::Days => "days",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeInfo {
    pub timestamp: f64,
    pub date_time_iso_format_string: String,
    pub timezone: String,
}

impl TimeInfo {
    pub fn render(&self) -> String {
        format!(
            "timestamp = {} date_time_iso_format_string = {} timezone = {}",
            format_timestamp(self.timestamp),
            quoted(&self.date_time_iso_format_string),
            quoted(&self.timezone)
        )
    }
}

/// Timestamp with microsecond precision, as printed in observations.
pub fn format_timestamp(ts: f64) -> String {
    format!("{ts:.6}")
}

fn to_datetime(ts: f64, tz: Tz) -> DateTime<Tz> {
    let mut secs = ts.floor() as i64;
    let mut micros = ((ts - ts.floor()) * 1e6).round() as i64;
    if micros >= 1_000_000 {
        secs += 1;
        micros -= 1_000_000;
    }
    DateTime::<Utc>::from_timestamp(secs, (micros * 1000) as u32)
        .unwrap_or_default()
        .with_timezone(&tz)
}

/// ISO-8601 with microseconds and numeric UTC offset, e.g.
/// `2024-11-01T18:36:08.411993-04:00`.
pub fn iso_string(ts: f64, tz: Tz) -> String {
    to_datetime(ts, tz).format("%Y-%m-%dT%H:%M:%S%.6f%:z").to_string()
}

pub fn date_string(ts: f64, tz: Tz) -> String {
    to_datetime(ts, tz).format("%Y-%m-%d").to_string()
}

pub fn weekday_string(ts: f64, tz: Tz) -> String {
    to_datetime(ts, tz).format("%A").to_string()
}

/// Reads the clock once and shifts it by `value * unit` (backwards when
/// `ago`).
pub fn time_info(value: TimeValue, unit: TimeUnit, ago: bool, clock: &Clock, tz: Tz) -> Result<TimeInfo, String> {
    let offset = match value {
        TimeValue::Now => 0.0,
        TimeValue::Amount(v) if v < 0.0 || !v.is_finite() => {
            return Err("time_value must be a nonnegative number or \"now\"".into())
        }
        TimeValue::Amount(v) => v * unit.seconds(),
    };
    let base = clock.now();
    let timestamp = if ago { base - offset } else { base + offset };
    Ok(TimeInfo {
        timestamp,
        date_time_iso_format_string: iso_string(timestamp, tz),
        timezone: tz.name().to_string(),
    })
}

/// T3.
pub struct TimeTool {
    spec: ToolSpec,
}

impl TimeTool {
    pub fn new() -> Self {
        TimeTool {
            spec: ToolSpec {
                tool_id: ToolId::T3,
                action_name: "Get_timestamp_and_time_ISO".into(),
                description: "Calculates the timestamp, the ISO formatted date time string and the timezone string of the requested time information. Use time_value \"now\" for the current time, or a number of time_metric units (seconds, minutes, hours or days) together with ago_flag 1 for the past or 0 for the future.".into(),
                inputs: vec![
                    InputField::required("time_value", FieldKind::String),
                    InputField::optional("time_metric", FieldKind::String),
                    InputField::optional("ago_flag", FieldKind::Flag),
                ],
                output_doc: "timestamp, date_time_iso_format_string and timezone".into(),
            },
        }
    }
}

impl Default for TimeTool {
    fn default() -> Self {
        Self::new()
    }
}

impl Tool for TimeTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let value = match args.raw("time_value") {
            Some(serde_json::Value::String(s)) if s.trim().eq_ignore_ascii_case("now") => TimeValue::Now,
            _ => match args.req_number("time_value") {
                Ok(v) => TimeValue::Amount(v),
                Err(_) => return ToolResult::error("time_value must be \"now\" or a number"),
            },
        };
        let unit = match args.str("time_metric") {
            Ok(Some(s)) => match s.parse::<TimeUnit>() {
                Ok(u) => u,
                Err(e) => return ToolResult::error(e),
            },
            Ok(None) => TimeUnit::Seconds,
            Err(e) => return ToolResult::error(e.to_string()),
        };
        let ago = match args.flag("ago_flag") {
            Ok(f) => f.unwrap_or(false),
            Err(e) => return ToolResult::error(e.to_string()),
        };
        match time_info(value, unit, ago, ctx.state.clock(), ctx.state.timezone()) {
            Ok(info) => {
                let structured = serde_json::to_value(&info).expect("serializable");
                ToolResult::ok(info.render(), structured)
            }
            Err(e) => ToolResult::error(e),
        }
    }
}
