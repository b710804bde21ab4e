//! CSV rows, bound table and the console summary.

use std::io::Write;

use lastgen_core::{theorem2_bound, SimReport};
use serde::{Deserialize, Serialize};

use crate::config::Cell;

/// Bumped whenever the gamma CSV columns change.
pub const SCHEMA_VERSION: u32 = 1;

pub const GAMMA_HEADER: [&str; 17] = [
    "rule",
    "n_honest",
    "T_seconds",
    "delta_B_i",
    "delta_O_i",
    "w",
    "offset_std",
    "ts_strategy",
    "a_t",
    "seed",
    "n_ties",
    "gamma_mean",
    "gamma_stderr",
    "theorem2_bound",
    "expected_gamma_ideal",
    "n_blocks_honest",
    "n_blocks_adversary",
];

pub const BOUNDS_HEADER: [&str; 4] = ["delta_O_i", "delta_B_i", "T_seconds", "theorem2_bound"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub rule: String,
    pub n_honest: u32,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
    #[serde(rename = "delta_B_i")]
    pub delta_b: f64,
    #[serde(rename = "delta_O_i")]
    pub delta_o: f64,
    pub w: f64,
    pub offset_std: f64,
    pub ts_strategy: String,
    pub a_t: f64,
    pub seed: u64,
    pub n_ties: u64,
    pub gamma_mean: Option<f64>,
    pub gamma_stderr: Option<f64>,
    pub theorem2_bound: f64,
    pub expected_gamma_ideal: f64,
    pub n_blocks_honest: u64,
    pub n_blocks_adversary: u64,
}

impl Row {
    pub fn from_report(cell: &Cell, report: &SimReport) -> Self {
        let cfg = &report.config;
        let p = cfg.local_params;
        Self {
            rule: cell.rule.to_string(),
            n_honest: cfg.n_honest,
            t_seconds: cfg.mean_block_interval,
            delta_b: p.delta_b,
            delta_o: p.delta_o,
            w: p.window,
            offset_std: cell.offset_std,
            ts_strategy: cell.strategy.label(),
            a_t: cell.a_t,
            seed: cfg.seed,
            n_ties: report.tie_events.len() as u64,
            gamma_mean: report.gamma_mean(),
            gamma_stderr: report.gamma_stderr(),
            theorem2_bound: report.theorem2_bound,
            expected_gamma_ideal: report.expected_gamma_ideal,
            n_blocks_honest: report.n_blocks_honest,
            n_blocks_adversary: report.n_blocks_adversary,
        }
    }
}

pub fn write_gamma_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(GAMMA_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per distinct (delta_O, delta_B, T), in first-seen order.
pub fn write_bounds_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(BOUNDS_HEADER)?;
    let mut seen: Vec<(f64, f64, f64)> = Vec::new();
    for r in rows {
        let key = (r.delta_o, r.delta_b, r.t_seconds);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let bound = theorem2_bound(r.delta_o, r.delta_b, r.t_seconds).unwrap_or(f64::NAN);
        w.serialize((key.0, key.1, key.2, bound))?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_table(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<11} {:>8} {:>8} {:>8} {:>10} {:>10} {:>8}\n",
        "rule", "delta_O", "std", "a_t", "gamma", "stderr", "bound"
    );
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in rows {
        s.push_str(&format!(
            "{:<11} {:>8} {:>8} {:>8} {:>10} {:>10} {:>8.4}\n",
            r.rule,
            r.delta_o,
            r.offset_std,
            r.a_t,
            fmt(r.gamma_mean),
            fmt(r.gamma_stderr),
            r.theorem2_bound
        ));
    }
    s
}
