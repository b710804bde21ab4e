//! Browser bindings: evidence classification, bound curves and a small
//! gamma simulation. Everything takes plain numbers so the page needs no glue
//! beyond what wasm-bindgen generates.

use lastgen_core::{
    expected_gamma_ideal, is_adversarial_evidence, run, theorem2_bound, LocalParams, OffsetDistribution, RuleName,
    SimConfig, SimTime, StopCondition, TimestampStrategy,
};
use wasm_bindgen::prelude::*;

/// Classifies `delta = arrival_local - timestamp` as "early", "honest" or "late".
#[wasm_bindgen]
pub fn classify(delta: f64, delta_o: f64, delta_b: f64) -> Result<String, String> {
    let params = LocalParams::new(delta_b, delta_o).map_err(|e| e.to_string())?;
    let flagged = is_adversarial_evidence(SimTime(delta), SimTime(0.0), &params);
    Ok(match (flagged, delta < 0.0) {
        (false, _) => "honest",
        (true, true) => "early",
        (true, false) => "late",
    }
    .to_string())
}

/// Flattened `(delta_o, bound, ideal)` triples for `points` values of
/// delta_o spread evenly over `[0, max_delta_o]`.
#[wasm_bindgen]
pub fn bound_curves(delta_b: f64, mean_interval: f64, max_delta_o: f64, points: u32) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let mut out = Vec::with_capacity(points as usize * 3);
    for i in 0..points {
        let delta_o = max_delta_o * f64::from(i) / f64::from(points - 1);
        out.push(delta_o);
        out.push(theorem2_bound(delta_o, delta_b, mean_interval).map_err(|e| e.to_string())?);
        out.push(expected_gamma_ideal(delta_o, delta_b, mean_interval).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Runs one cell against a 50% attacker stamping `delta_o + 2 delta_b` ahead.
/// Returns `[gamma_mean, gamma_stderr, bound, ideal, n_ties, honest_blocks, attacker_blocks]`;
/// the stderr slot is NaN with fewer than two ties.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    rule: &str,
    n_honest: u32,
    delta_o: f64,
    delta_b: f64,
    offset_std: f64,
    propagation_delay: f64,
    ties: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let rule: RuleName = rule.parse()?;
    let cfg = SimConfig {
        n_honest,
        rule,
        propagation_delay,
        offsets: if offset_std == 0.0 {
            OffsetDistribution::Zero
        } else {
            OffsetDistribution::Normal { std: offset_std }
        },
        local_params: LocalParams::new(delta_b, delta_o).map_err(|e| e.to_string())?,
        timestamp_strategy: TimestampStrategy::TheoremOptimal { delta_o, delta_b },
        stop: StopCondition::Ties(u64::from(ties)),
        seed: u64::from(seed),
        ..SimConfig::default()
    };
    let report = run(&cfg).map_err(|e| e.to_string())?;
    Ok(vec![
        report.gamma_mean().unwrap_or(f64::NAN),
        report.gamma_stderr().unwrap_or(f64::NAN),
        report.theorem2_bound,
        report.expected_gamma_ideal,
        report.tie_events.len() as f64,
        report.n_blocks_honest as f64,
        report.n_blocks_adversary as f64,
    ])
}
