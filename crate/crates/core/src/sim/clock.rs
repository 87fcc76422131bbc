use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

/// Source of "now" for the time tool and validators.
#[derive(Debug, Clone, PartialEq)]
pub enum ClockMode {
    System,
    /// Every reading returns the same timestamp.
    Fixed(f64),
    /// Successive readings walk the list, then hold the last value. Used to
    /// reproduce recorded traces where wall time advanced between tool calls.
    Replay(Vec<f64>),
}

/// Clock with per-run replay position. Cloning yields a clock rewound to its
/// first reading, so each agent run starts from the same instant.
#[derive(Debug)]
pub struct Clock {
    mode: ClockMode,
    cursor: AtomicUsize,
}

impl Clock {
    pub fn new(mode: ClockMode) -> Self {
        if let ClockMode::Replay(r) = &mode {
            assert!(!r.is_empty(), "replay clock needs at least one reading");
        }
        Clock {
            mode,
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn system() -> Self {
        Clock::new(ClockMode::System)
    }

    pub fn fixed(ts: f64) -> Self {
        Clock::new(ClockMode::Fixed(ts))
    }

    pub fn replay(readings: Vec<f64>) -> Self {
        Clock::new(ClockMode::Replay(readings))
    }

    pub fn mode(&self) -> &ClockMode {
        &self.mode
    }

    /// Seconds since the Unix epoch.
    pub fn now(&self) -> f64 {
        match &self.mode {
            ClockMode::System => system_now(),
            ClockMode::Fixed(ts) => *ts,
            ClockMode::Replay(readings) => {
                let i = self.cursor.fetch_add(1, Ordering::Relaxed);
                readings[i.min(readings.len() - 1)]
            }
        }
    }

    /// The first reading of a run, without advancing a replay clock.
    pub fn reference_now(&self) -> f64 {
        match &self.mode {
            ClockMode::System => system_now(),
            ClockMode::Fixed(ts) => *ts,
            ClockMode::Replay(readings) => readings[0],
        }
    }

    pub fn rewound(&self) -> Clock {
        Clock::new(self.mode.clone())
    }
}

impl Clone for Clock {
    fn clone(&self) -> Self {
        self.rewound()
    }
}

impl Default for Clock {
    fn default() -> Self {
        Clock::system()
    }
}

fn system_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.mode {
            ClockMode::System => f.write_str("system"),
            ClockMode::Fixed(ts) => write!(f, "fixed:{ts}"),
            ClockMode::Replay(r) => {
                let parts: Vec<String> = r.iter().map(|t| t.to_string()).collect();
                write!(f, "replay:{}", parts.join(","))
            }
        }
    }
}

/// Parses `system`, `fixed:<ts>` or `replay:<ts>,<ts>,...`.
impl FromStr for Clock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_ts = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| format!("invalid timestamp `{v}`"))
        };
        if s == "system" {
            return Ok(Clock::system());
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            return Ok(Clock::fixed(parse_ts(v)?));
        }
        if let Some(v) = s.strip_prefix("replay:") {
            let readings = v.split(',').map(parse_ts).collect::<Result<Vec<_>, _>>()?;
            return Ok(Clock::replay(readings));
        }
        Err(format!("unknown clock `{s}` (expected system, fixed:<ts> or replay:<ts>,...)"))
    }
}
