//! Measuring gamma, the hashrate share of honest miners that follow the
//! attacker's chain during a tie, and the analytic curves it is checked against.

use serde::{Deserialize, Serialize};

use crate::engine::SimConfig;
use crate::error::CoreError;
use crate::types::MinerId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerChoice {
    pub miner: MinerId,
    pub chose_adversary: bool,
    pub weight: f64,
}

/// One attacker-forced tie and what every honest miner did about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieEvent {
    pub tie_id: u64,
    /// True time at which the tie was created.
    pub true_time: f64,
    /// True time between the withheld block's creation and the tie.
    pub withholding: f64,
    /// Per honest miner, indexed by miner number.
    pub follows_adversary: Vec<bool>,
    /// Hashrate share of each honest miner.
    pub miner_weight: f64,
    pub gamma: f64,
}

impl TieEvent {
    pub fn new(tie_id: u64, true_time: f64, withholding: f64, follows_adversary: Vec<bool>, miner_weight: f64) -> Self {
        let followers = follows_adversary.iter().filter(|&&f| f).count();
        let gamma = if follows_adversary.is_empty() { 0.0 } else { followers as f64 / follows_adversary.len() as f64 };
        Self { tie_id, true_time, withholding, follows_adversary, miner_weight, gamma }
    }

    pub fn choices(&self) -> impl Iterator<Item = MinerChoice> + '_ {
        self.follows_adversary.iter().enumerate().map(|(i, &chose_adversary)| MinerChoice {
            miner: MinerId::honest(i as u32),
            chose_adversary,
            weight: self.miner_weight,
        })
    }
}

/// Hashrate-weighted share of honest choices that went to the attacker.
pub fn gamma_event(choices: &[MinerChoice]) -> Result<f64, CoreError> {
    let total: f64 = choices.iter().map(|c| c.weight).sum();
    if choices.is_empty() || total <= 0.0 {
        return Err(CoreError::NoChoices);
    }
    let following: f64 = choices.iter().filter(|c| c.chose_adversary).map(|c| c.weight).sum();
    Ok(following / total)
}

fn check_non_negative(name: &'static str, value: f64) -> Result<(), CoreError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CoreError::InvalidParam { name, value })
    }
}

fn check_interval(t: f64) -> Result<(), CoreError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(CoreError::NonPositiveInterval(t))
    }
}

/// Upper bound on the average gamma of the last-generated rule when every
/// miner uses the same bounds and the attacker knows them:
/// `1/2 - 1/2 * exp(-(2 delta_o + 3 delta_b) / mean_interval)`.
pub fn theorem2_bound(delta_o: f64, delta_b: f64, mean_interval: f64) -> Result<f64, CoreError> {
    check_non_negative("delta_o", delta_o)?;
    check_non_negative("delta_b", delta_b)?;
    check_interval(mean_interval)?;
    Ok(0.5 - 0.5 * (-(2.0 * delta_o + 3.0 * delta_b) / mean_interval).exp())
}

/// Gamma expected with exact clocks when the attacker stamps
/// `delta_o + 2 delta_b` ahead and the honest block follows the withheld one
/// after an exponential gap with mean `mean_gap`.
///
/// Gaps below `2 delta_b` expose the block as future-dated, gaps above
/// `2 delta_o + 3 delta_b` expose it as stale, and in between every miner
/// flips a fair coin.
pub fn expected_gamma_ideal(delta_o: f64, delta_b: f64, mean_gap: f64) -> Result<f64, CoreError> {
    check_non_negative("delta_o", delta_o)?;
    check_non_negative("delta_b", delta_b)?;
    check_interval(mean_gap)?;
    let open = (-2.0 * delta_b / mean_gap).exp();
    let close = (-(2.0 * delta_o + 3.0 * delta_b) / mean_gap).exp();
    Ok(0.5 * (open - close))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub n: u64,
    pub mean: f64,
    /// Absent for a single event.
    pub stderr: Option<f64>,
}

/// Running mean and variance that can be merged across independent runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GammaAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl GammaAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &GammaAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn summary(&self) -> Option<GammaSummary> {
        match self.n {
            0 => None,
            1 => Some(GammaSummary { n: 1, mean: self.mean, stderr: None }),
            n => {
                let var = self.m2 / (n - 1) as f64;
                Some(GammaSummary { n, mean: self.mean, stderr: Some((var / n as f64).sqrt()) })
            }
        }
    }
}

/// Unweighted mean over tie events with its standard error; `None` without ties.
pub fn aggregate<I: IntoIterator<Item = f64>>(gammas: I) -> Option<GammaSummary> {
    let mut acc = GammaAccumulator::default();
    gammas.into_iter().for_each(|g| acc.push(g));
    acc.summary()
}

/// Everything one simulation run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub tie_events: Vec<TieEvent>,
    pub gamma: Option<GammaSummary>,
    pub n_blocks_honest: u64,
    pub n_blocks_adversary: u64,
    /// True time at which the run stopped.
    pub end_time: f64,
    /// Whole-network mean block interval.
    pub network_interval: f64,
    /// Mean interval between honest blocks alone.
    pub honest_interval: f64,
    /// Mean gap between a withheld block and the honest block that ties it.
    pub tie_gap_interval: f64,
    /// Observed mean withholding time over recorded ties.
    pub mean_withholding: Option<f64>,
    pub theorem2_bound: f64,
    /// Closed-form gamma evaluated at `tie_gap_interval`.
    pub expected_gamma_ideal: f64,
}

impl SimReport {
    pub fn gamma_mean(&self) -> Option<f64> {
        self.gamma.map(|g| g.mean)
    }

    pub fn gamma_stderr(&self) -> Option<f64> {
        self.gamma.and_then(|g| g.stderr)
    }
}
