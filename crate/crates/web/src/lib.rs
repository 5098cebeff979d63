//! Browser bindings: the navigation example's ε-sweep, synthesis, and
//! verification on model text typed into the page.
//!
//! The plain functions return `Result<String, String>` so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers turn errors into JS exceptions.

use imdp_permissive::bench::nav3_model;
use imdp_permissive::io::{fmt_num, parse_model, parse_spec, parse_strategy, write_model};
use imdp_permissive::robust::check_robust_satisfaction;
use imdp_permissive::synth::{epsilon_grid, sweep_csv, sweep_epsilon, synthesize, SynthConfig};
use imdp_permissive::EncodingKind;
use wasm_bindgen::prelude::*;

/// Keeps a runaway solve from freezing the tab.
const NODE_CAP: u64 = 200_000;

pub fn nav3_text(eps: f64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(format!("epsilon {eps} outside [0, 1]"));
    }
    Ok(write_model(&nav3_model(eps)))
}

pub fn sweep_text(start: f64, end: f64, step: f64) -> Result<String, String> {
    if !(0.0 <= start && start <= end && end <= 1.0 && step > 0.0) {
        return Err("expected 0 <= start <= end <= 1 and step > 0".into());
    }
    let grid = epsilon_grid(start, end, step);
    let target = nav3_model(0.0).label("goal").expect("nav3 has a goal label").clone();
    let rows = sweep_epsilon(|e| Ok(nav3_model(e)), &target, None, &grid).map_err(|e| e.to_string())?;
    Ok(sweep_csv(&rows))
}

pub fn synthesize_text(model: &str, spec: &str, encoding: &str) -> Result<String, String> {
    let model = parse_model(model).map_err(|e| format!("model: {e}"))?;
    let spec = parse_spec(spec, &model).map_err(|e| format!("spec: {e}"))?;
    let kind: EncodingKind = encoding.parse()?;
    let mut config = SynthConfig::default();
    config.solver.node_cap = NODE_CAP;
    let report = synthesize(&model, &spec, kind, &config).map_err(|e| e.to_string())?;
    Ok(report.to_string())
}

pub fn verify_text(model: &str, spec: &str, strategy: &str) -> Result<String, String> {
    let model = parse_model(model).map_err(|e| format!("model: {e}"))?;
    let spec = parse_spec(spec, &model).map_err(|e| format!("spec: {e}"))?;
    let theta = parse_strategy(strategy, &model).map_err(|e| format!("strategy: {e}"))?;
    let v = check_robust_satisfaction(&model, &theta, &spec).map_err(|e| e.to_string())?;
    let verdict = if v.satisfied { "satisfied" } else { "violated" };
    Ok(format!("{verdict}: value at the initial state is {}", fmt_num(v.witness)))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Model file of the navigation example at radius `eps`.
#[wasm_bindgen(js_name = nav3Model)]
pub fn nav3_model_js(eps: f64) -> Result<String, JsError> {
    js(nav3_text(eps))
}

/// CSV `epsilon,action,min_value,max_value` for both initial actions.
#[wasm_bindgen(js_name = sweepNav3)]
pub fn sweep_nav3_js(start: f64, end: f64, step: f64) -> Result<String, JsError> {
    js(sweep_text(start, end, step))
}

/// Text report; `encoding` is `vertex` or `dual`.
#[wasm_bindgen(js_name = synthesize)]
pub fn synthesize_js(model: &str, spec: &str, encoding: &str) -> Result<String, JsError> {
    js(synthesize_text(model, spec, encoding))
}

#[wasm_bindgen(js_name = verify)]
pub fn verify_js(model: &str, spec: &str, strategy: &str) -> Result<String, JsError> {
    js(verify_text(model, spec, strategy))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOAL: &str = r#"P>=0.65 [F "goal"]"#;

    #[test]
    fn synthesis_round_trip() {
        let model = nav3_text(0.1).unwrap();
        for enc in ["vertex", "dual"] {
            let report = synthesize_text(&model, GOAL, enc).unwrap();
            assert!(report.contains("beta: 2\n"), "{report}");
        }
        let report = synthesize_text(&nav3_text(0.05).unwrap(), GOAL, "dual").unwrap();
        assert!(report.contains("beta: 3\n"), "{report}");
        assert!(synthesize_text(&model, GOAL, "cubic").is_err());
        assert!(synthesize_text("imdp x", GOAL, "dual").is_err());
    }

    #[test]
    fn verification() {
        let model = nav3_text(0.1).unwrap();
        assert!(verify_text(&model, GOAL, "s0: f m\n").unwrap().starts_with("violated"));
        assert!(verify_text(&model, GOAL, "s0: f\n").unwrap().starts_with("satisfied"));
        assert!(verify_text(&model, GOAL, "s0: jump\n").is_err());
    }

    #[test]
    fn sweep_rows() {
        let csv = sweep_text(0.0, 0.2, 0.01).unwrap();
        assert_eq!(csv.lines().count(), 1 + 21 * 2);
        assert!(csv.contains("\n0,f,0.78,0.78\n"));
        assert!(sweep_text(0.3, 0.2, 0.01).is_err());
    }
}
