//! TOML experiment files and their expansion into simulation cells.

use std::path::{Path, PathBuf};

use lastgen_core::{LocalParams, OffsetDistribution, RuleName, SimConfig, StopCondition, TimestampStrategy};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_OFFSET_STDS: [f64; 6] = [0.0, 10.0, 20.0, 50.0, 100.0, 200.0];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub network: NetworkSection,
    pub params: ParamsSection,
    pub adversary: AdversarySection,
    pub sweep: SweepSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub n_honest: u32,
    pub mean_block_interval: f64,
    pub adversary_fraction: f64,
    pub propagation_delay: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { n_honest: 1000, mean_block_interval: 600.0, adversary_fraction: 0.5, propagation_delay: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub delta_b: f64,
    /// Acceptance window; follows `delta_b` when absent.
    pub window: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { delta_b: 20.0, window: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarySection {
    pub timestamp_strategy: String,
}

impl Default for AdversarySection {
    fn default() -> Self {
        Self { timestamp_strategy: "theorem_optimal".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub rules: Vec<String>,
    pub offset_std: Vec<f64>,
    pub delta_o: Vec<f64>,
    pub a_t: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            rules: vec!["proposed".into(), "random".into()],
            offset_std: DEFAULT_OFFSET_STDS.to_vec(),
            delta_o: vec![20.0],
            a_t: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub ties: u64,
    pub replications: u32,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { ties: 10_000, replications: 1 }
    }
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub rules: Vec<String>,
    pub offset_std: Option<Vec<f64>>,
    pub delta_o: Option<Vec<f64>>,
    pub delta_b: Option<f64>,
    pub a_t: Option<Vec<f64>>,
    pub ties: Option<u64>,
    pub jobs: Option<usize>,
}

/// How the attacker stamps blocks across a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    HonestClock,
    FixedOffset(f64),
    /// Resolved per cell against that cell's bounds.
    TheoremOptimal,
}

impl StrategySpec {
    pub fn resolve(&self, delta_o: f64, delta_b: f64) -> TimestampStrategy {
        match *self {
            Self::HonestClock => TimestampStrategy::HonestClock,
            Self::FixedOffset(seconds) => TimestampStrategy::FixedOffset { seconds },
            Self::TheoremOptimal => TimestampStrategy::TheoremOptimal { delta_o, delta_b },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::HonestClock => "honest_clock".into(),
            Self::FixedOffset(s) => format!("fixed_offset:{s}"),
            Self::TheoremOptimal => "theorem_optimal".into(),
        }
    }
}

impl std::str::FromStr for StrategySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest_clock" => Ok(Self::HonestClock),
            "theorem_optimal" => Ok(Self::TheoremOptimal),
            _ => match s.strip_prefix("fixed_offset:").map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => Ok(Self::FixedOffset(v)),
                _ => Err(format!(
                    "unknown timestamp strategy {s:?}; expected honest_clock, theorem_optimal or fixed_offset:<seconds>"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Settings shared by every cell; swept fields are overwritten per cell.
    pub base: SimConfig,
    pub rules: Vec<RuleName>,
    pub offset_stds: Vec<f64>,
    pub delta_os: Vec<f64>,
    pub a_ts: Vec<f64>,
    pub strategy: StrategySpec,
    /// Explicit window, or `None` to track `delta_b`.
    pub window: Option<f64>,
    pub replications: u32,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub rule: RuleName,
    pub delta_o: f64,
    pub offset_std: f64,
    pub a_t: f64,
    pub replication: u32,
    pub strategy: StrategySpec,
    pub config: SimConfig,
}

impl ExperimentPlan {
    pub fn delta_b(&self) -> f64 {
        self.base.local_params.delta_b
    }

    pub fn n_cells(&self) -> usize {
        self.delta_os.len() * self.a_ts.len() * self.rules.len() * self.offset_stds.len() * self.replications as usize
    }

    /// Cross product in fixed order: delta_o, a_t, rule, offset std, replication.
    pub fn cells(&self) -> Result<Vec<Cell>, CliError> {
        let delta_b = self.delta_b();
        let mut cells = Vec::with_capacity(self.n_cells());
        for &delta_o in &self.delta_os {
            let window = self.window.unwrap_or(delta_b);
            let params = LocalParams::with_window(delta_b, delta_o, window)
                .map_err(|e| CliError::Config(format!("sweep.delta_o = {delta_o}: {e}")))?;
            for &a_t in &self.a_ts {
                for &rule in &self.rules {
                    for &offset_std in &self.offset_stds {
                        for replication in 0..self.replications {
                            let index = cells.len();
                            let offsets = if offset_std == 0.0 {
                                OffsetDistribution::Zero
                            } else {
                                OffsetDistribution::Normal { std: offset_std }
                            };
                            let config = SimConfig {
                                rule,
                                local_params: params,
                                offsets,
                                adversary_clock_offset: a_t,
                                timestamp_strategy: self.strategy.resolve(delta_o, delta_b),
                                seed: self.base.seed.wrapping_add(index as u64),
                                ..self.base.clone()
                            };
                            cells.push(Cell {
                                index,
                                rule,
                                delta_o,
                                offset_std,
                                a_t,
                                replication,
                                strategy: self.strategy,
                                config,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

fn check_non_negative(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: must be a non-negative number of seconds, got {v}")))
    }
}

fn check_list(key: &str, values: &[f64], finite_only: bool) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{key}: list must not be empty")));
    }
    for (i, &v) in values.iter().enumerate() {
        let item = format!("{key}[{i}]");
        if finite_only {
            if !v.is_finite() {
                return Err(CliError::Config(format!("{item}: must be finite, got {v}")));
            }
        } else {
            check_non_negative(&item, v)?;
        }
    }
    Ok(())
}

pub fn parse_rules(key: &str, names: &[String]) -> Result<Vec<RuleName>, CliError> {
    if names.is_empty() {
        return Err(CliError::Config(format!("{key}: list must not be empty")));
    }
    names
        .iter()
        .enumerate()
        .map(|(i, n)| n.parse::<RuleName>().map_err(|e| CliError::Config(format!("{key}[{i}]: {e}"))))
        .collect()
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ExperimentPlan, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
    build_plan(file, overrides)
}

/// Reads an experiment file (or none, for all defaults) and applies overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentPlan, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

fn build_plan(mut file: FileConfig, o: &Overrides) -> Result<ExperimentPlan, CliError> {
    if !o.rules.is_empty() {
        file.sweep.rules = o.rules.clone();
    }
    if let Some(v) = &o.offset_std {
        file.sweep.offset_std = v.clone();
    }
    if let Some(v) = &o.delta_o {
        file.sweep.delta_o = v.clone();
    }
    if let Some(v) = &o.a_t {
        file.sweep.a_t = v.clone();
    }
    if let Some(v) = o.delta_b {
        file.params.delta_b = v;
    }
    if let Some(v) = o.ties {
        file.run.ties = v;
    }
    let seed = o.seed.or(file.seed).unwrap_or(0);
    let out_dir = o.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results"));
    let jobs = o.jobs.or(file.jobs);

    let net = &file.network;
    if net.n_honest == 0 {
        return Err(CliError::Config("network.n_honest: must be at least 1".into()));
    }
    if !(net.mean_block_interval.is_finite() && net.mean_block_interval > 0.0) {
        return Err(CliError::Config(format!(
            "network.mean_block_interval: must be positive, got {}",
            net.mean_block_interval
        )));
    }
    if !(0.0..1.0).contains(&net.adversary_fraction) || net.adversary_fraction == 0.0 {
        return Err(CliError::Config(format!(
            "network.adversary_fraction: must lie in (0, 1), got {}",
            net.adversary_fraction
        )));
    }
    check_non_negative("network.propagation_delay", net.propagation_delay)?;
    check_non_negative("params.delta_b", file.params.delta_b)?;
    if let Some(w) = file.params.window {
        check_non_negative("params.window", w)?;
    }
    check_list("sweep.offset_std", &file.sweep.offset_std, false)?;
    check_list("sweep.delta_o", &file.sweep.delta_o, false)?;
    check_list("sweep.a_t", &file.sweep.a_t, true)?;
    let rules = parse_rules("sweep.rules", &file.sweep.rules)?;
    let strategy: StrategySpec = file
        .adversary
        .timestamp_strategy
        .parse()
        .map_err(|e| CliError::Config(format!("adversary.timestamp_strategy: {e}")))?;
    if file.run.ties == 0 {
        return Err(CliError::Config("run.ties: must be at least 1".into()));
    }
    if file.run.replications == 0 {
        return Err(CliError::Config("run.replications: must be at least 1".into()));
    }
    if jobs == Some(0) {
        return Err(CliError::Config("jobs: must be at least 1".into()));
    }

    let delta_b = file.params.delta_b;
    let base = SimConfig {
        n_honest: net.n_honest,
        adversary_fraction: net.adversary_fraction,
        mean_block_interval: net.mean_block_interval,
        propagation_delay: net.propagation_delay,
        local_params: LocalParams::with_window(delta_b, file.sweep.delta_o[0], file.params.window.unwrap_or(delta_b))
            .map_err(|e| CliError::Config(format!("params: {e}")))?,
        stop: StopCondition::Ties(file.run.ties),
        seed,
        ..SimConfig::default()
    };
    Ok(ExperimentPlan {
        base,
        rules,
        offset_stds: file.sweep.offset_std,
        delta_os: file.sweep.delta_o,
        a_ts: file.sweep.a_t,
        strategy,
        window: file.params.window,
        replications: file.run.replications,
        out_dir,
        jobs,
    })
}
