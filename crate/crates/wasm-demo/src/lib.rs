//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations, all pure: plot the irate of a generated counter,
//! run the MLASP surrogate search, and parse one ReAct completion.

use wasm_bindgen::prelude::*;

use aiops_core::fixture::{GeneratorKind, GeneratorSpec};
use aiops_core::react::parse_step;
use aiops_core::sim::irate_points;
use aiops_core::tools::mlasp_search;
use aiops_core::tools::plot::render_svg;

/// Longest series the page will generate; keeps the SVG responsive.
const MAX_SAMPLES: f64 = 20_000.0;

/// SVG plot of the per-second rate of a synthetic counter.
#[wasm_bindgen]
pub fn irate_svg(span_hours: f64, step_s: f64, rate_per_s: f64, seed: u32) -> Result<String, JsError> {
    if !(span_hours > 0.0 && step_s > 0.0 && rate_per_s >= 0.0) {
        return Err(JsError::new("span and step must be positive, rate non-negative"));
    }
    let span_s = span_hours * 3600.0;
    if span_s / step_s > MAX_SAMPLES {
        return Err(JsError::new(&format!("at most {MAX_SAMPLES} samples; increase the step")));
    }
    let start = 1_730_327_770.0;
    let gen = GeneratorSpec {
        kind: GeneratorKind::Counter,
        start_ts: start,
        end_ts: start + span_s,
        step_s,
        rate_per_s,
        jitter_seed: seed as u64,
    };
    let points = irate_points(&gen.materialize()).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(render_svg(&points, "irate(counter)"))
}

/// MLASP search result as JSON.
#[wasm_bindgen]
pub fn mlasp(target_kpi: f64, precision_pct: f64, epochs: u32, seed: u32) -> Result<String, JsError> {
    let out = mlasp_search(target_kpi, precision_pct, epochs, seed as u64).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&out).expect("outcome serializes"))
}

/// Parsed step as JSON, tagged by `variant`: `tool_call`, `finish` or
/// `malformed`.
#[wasm_bindgen]
pub fn parse_react_step(text: &str) -> String {
    serde_json::to_string(&parse_step(text)).expect("step serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_a_polyline() {
        let svg = irate_svg(2.0, 60.0, 5.0, 1).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
        assert!(svg.contains("polyline") || svg.contains("path"));
    }

    #[test]
    fn mlasp_json_round_trips() {
        let v: serde_json::Value = serde_json::from_str(&mlasp(307.0, 2.9, 100, 7).unwrap()).unwrap();
        assert_eq!(v["within_precision"], true);
        let kpi = v["predicted_kpi"].as_f64().unwrap();
        assert!((298.097..=315.903).contains(&kpi));
    }

    #[test]
    fn step_variants() {
        let v: serde_json::Value =
            serde_json::from_str(&parse_react_step("Action: Get_timestamp_and_time_ISO\nAction Input: {}")).unwrap();
        assert_eq!(v["variant"], "tool_call");
        assert_eq!(v["action_name"], "Get_timestamp_and_time_ISO");
        let v: serde_json::Value = serde_json::from_str(&parse_react_step("Final Answer: 42")).unwrap();
        assert_eq!((v["variant"].as_str(), v["final_answer"].as_str()), (Some("finish"), Some("42")));
        let v: serde_json::Value = serde_json::from_str(&parse_react_step("hmm")).unwrap();
        assert_eq!(v["variant"], "malformed");
    }
}
