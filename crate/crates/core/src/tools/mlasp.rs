//! T1: capacity-configuration search against a KPI target.
//!
//! Stands in for a trained capacity-planning model with a closed-form
//! surrogate and seeded random search, which keeps the contract (a
//! configuration within a precision band after N epochs) while staying
//! deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Tool, ToolArgs, ToolContext, ToolResult};
use crate::domain::{FieldKind, InputField, ToolId, ToolSpec};

pub const THREADS: (u32, u32) = (10, 400);
/// CPU cores, drawn in steps of 0.01.
pub const CPU: (f64, f64) = (0.5, 4.0);
pub const MEMORY_MB: (u32, u32) = (256, 4096);
pub const HEAP_MB: (u32, u32) = (128, 2048);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub async_response_threads: u32,
    pub container_cpu: f64,
    pub container_memory_mb: u32,
    pub jvm_heap_mb: u32,
}

impl CapacityConfig {
    pub fn in_bounds(&self) -> bool {
        (THREADS.0..=THREADS.1).contains(&self.async_response_threads)
            && self.container_cpu >= CPU.0
            && self.container_cpu <= CPU.1
            && (MEMORY_MB.0..=MEMORY_MB.1).contains(&self.container_memory_mb)
            && (HEAP_MB.0..=HEAP_MB.1).contains(&self.jvm_heap_mb)
    }
}

/// Throughput predicted for a configuration.
pub fn surrogate_kpi(c: &CapacityConfig) -> f64 {
    12.0 * (1.0 + c.async_response_threads as f64).ln()
        + 35.0 * c.container_cpu
        + 0.04 * c.jvm_heap_mb as f64
        + 0.01 * c.container_memory_mb as f64
}

pub fn sample_config(rng: &mut impl Rng) -> CapacityConfig {
    let cpu_steps = (CPU.0 * 100.0) as u32..=(CPU.1 * 100.0) as u32;
    CapacityConfig {
        async_response_threads: rng.gen_range(THREADS.0..=THREADS.1),
        container_cpu: rng.gen_range(cpu_steps) as f64 / 100.0,
        container_memory_mb: rng.gen_range(MEMORY_MB.0..=MEMORY_MB.1),
        jvm_heap_mb: rng.gen_range(HEAP_MB.0..=HEAP_MB.1),
    }
}

pub fn within_band(kpi: f64, target: f64, precision_pct: f64) -> bool {
    (kpi - target).abs() <= target * precision_pct / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlaspOutcome {
    pub config: CapacityConfig,
    pub predicted_kpi: f64,
    pub within_precision: bool,
    pub band: (f64, f64),
    pub epochs_evaluated: u32,
}

impl MlaspOutcome {
    pub fn render(&self) -> String {
        let c = &self.config;
        format!(
            "within_precision = {} predicted_kpi = {:.3} params = {{async_response_threads = {}, container_cpu = {}, container_memory_mb = {}, jvm_heap_mb = {}}} band = [{:.3}, {:.3}] epochs_evaluated = {}",
            self.within_precision,
            self.predicted_kpi,
            c.async_response_threads,
            c.container_cpu,
            c.container_memory_mb,
            c.jvm_heap_mb,
            self.band.0,
            self.band.1,
            self.epochs_evaluated
        )
    }
}

/// Draws up to `epochs` configurations; returns the first one inside the
/// band, otherwise the closest by absolute error.
pub fn mlasp_search(target_kpi: f64, precision_pct: f64, epochs: u32, seed: u64) -> Result<MlaspOutcome, String> {
    if !(target_kpi > 0.0) || !target_kpi.is_finite() {
        return Err("target_kpi must be positive".into());
    }
    if !(precision_pct >= 0.0) || !precision_pct.is_finite() {
        return Err("precision_pct must be nonnegative".into());
    }
    if epochs == 0 {
        return Err("epochs must be at least 1".into());
    }
    let band = (
        target_kpi * (1.0 - precision_pct / 100.0),
        target_kpi * (1.0 + precision_pct / 100.0),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, CapacityConfig, f64)> = None;
    for epoch in 1..=epochs {
        let config = sample_config(&mut rng);
        let kpi = surrogate_kpi(&config);
        if within_band(kpi, target_kpi, precision_pct) {
            return Ok(MlaspOutcome {
                config,
                predicted_kpi: kpi,
                within_precision: true,
                band,
                epochs_evaluated: epoch,
            });
        }
        let err = (kpi - target_kpi).abs();
        if best.is_none_or(|(e, _, _)| err < e) {
            best = Some((err, config, kpi));
        }
    }
    let (_, config, kpi) = best.expect("epochs >= 1");
    Ok(MlaspOutcome {
        config,
        predicted_kpi: kpi,
        within_precision: false,
        band,
        epochs_evaluated: epochs,
    })
}

/// T1.
pub struct MlaspTool {
    spec: ToolSpec,
}

impl MlaspTool {
    pub fn new() -> Self {
        MlaspTool {
            spec: ToolSpec {
                tool_id: ToolId::T1,
                action_name: "Generate_Capacity_Configuration_With_MLASP".into(),
                description: "Generates a WireMock application configuration (async_response_threads, container_cpu, container_memory_mb, jvm_heap_mb) that supports a desired throughput KPI value within a precision percentage, searching for the given number of epochs.".into(),
                inputs: vec![
                    InputField::required("target_kpi", FieldKind::Number),
                    InputField::required("precision_pct", FieldKind::Number),
                    InputField::optional("epochs", FieldKind::Integer),
                ],
                output_doc: "within_precision, predicted_kpi and params".into(),
            },
        }
    }
}

impl Default for MlaspTool {
    fn default() -> Self {
        Self::new()
    }
}

pub const DEFAULT_EPOCHS: u32 = 100;

impl Tool for MlaspTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, ctx: &ToolContext<'_>) -> ToolResult {
        let parsed = (|| {
            let target = args.req_number("target_kpi")?;
            let precision = args.req_number("precision_pct")?;
            let epochs = args.integer("epochs")?;
            Ok::<_, super::ArgError>((target, precision, epochs))
        })();
        let (target, precision, epochs) = match parsed {
            Ok(x) => x,
            Err(e) => return ToolResult::error(e.to_string()),
        };
        let epochs = match epochs {
            None => DEFAULT_EPOCHS,
            Some(e) if (1..=1_000_000).contains(&e) => e as u32,
            Some(_) => return ToolResult::error("epochs must be between 1 and 1000000"),
        };
        match mlasp_search(target, precision, epochs, ctx.seed) {
            Ok(out) => {
                let structured = serde_json::to_value(&out).expect("serializable");
                ToolResult::ok(out.render(), structured)
            }
            Err(e) => ToolResult::error(e),
        }
    }
}
