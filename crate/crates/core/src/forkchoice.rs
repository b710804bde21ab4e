//! Tie-breaking among chains of equal height.
//!
//! The last-generated rule works from two locally configured bounds: the
//! propagation bound `delta_b` and the clock-skew bound `delta_o`. Under those
//! bounds an honestly produced block always satisfies
//! `-delta_o <= arrival_local - timestamp <= delta_o + delta_b`, so a tip that
//! falls outside that band can only have come from an adversary. A miner
//! facing a tie first drops tips that arrived more than `window` after the
//! earliest one, then drops tips showing adversarial evidence, and picks
//! uniformly among what remains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::{BlockId, LocalParams, ReceivedBlock, SimTime};

/// Head of one chain in a tie, as seen by the deciding miner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieCandidate {
    pub chain_id: BlockId,
    pub tip: ReceivedBlock,
}

impl TieCandidate {
    pub fn new(tip: ReceivedBlock) -> Self {
        Self { chain_id: tip.block.id, tip }
    }

    fn arrival(&self) -> f64 {
        self.tip.arrival_local.0
    }

    fn timestamp(&self) -> SimTime {
        self.tip.block.timestamp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// The last-generated rule with the deciding miner's own parameters.
    Proposed(LocalParams),
    Random,
    FirstSeen,
}

/// Rule selection without parameters, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Proposed,
    Random,
    FirstSeen,
}

impl RuleName {
    pub const ALL: [RuleName; 3] = [RuleName::Proposed, RuleName::Random, RuleName::FirstSeen];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Random => "random",
            Self::FirstSeen => "first_seen",
        }
    }

    pub fn with_params(self, params: LocalParams) -> RuleKind {
        match self {
            Self::Proposed => RuleKind::Proposed(params),
            Self::Random => RuleKind::Random,
            Self::FirstSeen => RuleKind::FirstSeen,
        }
    }
}

impl std::str::FromStr for RuleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule {s:?}; expected one of proposed, random, first_seen"))
    }
}

impl std::fmt::Display for RuleName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposed(_) => "proposed",
            Self::Random => "random",
            Self::FirstSeen => "first_seen",
        }
    }

    pub fn choose<'a, R: Rng + ?Sized>(
        &self,
        candidates: &'a [TieCandidate],
        rng: &mut R,
    ) -> Result<&'a TieCandidate, CoreError> {
        match self {
            Self::Proposed(params) => get_main_chain(candidates, params, rng),
            Self::Random => random_rule(candidates, rng),
            Self::FirstSeen => first_seen_rule(candidates, rng),
        }
    }
}

/// True when the gap between local arrival and claimed timestamp cannot be
/// explained by honest behaviour under `params`. Boundary values are honest.
pub fn is_adversarial_evidence(arrival_local: SimTime, timestamp: SimTime, params: &LocalParams) -> bool {
    let delta = arrival_local - timestamp;
    delta < -params.delta_o || delta > params.delta_o + params.delta_b
}

fn earliest_arrival(candidates: &[TieCandidate]) -> f64 {
    candidates.iter().map(TieCandidate::arrival).fold(f64::INFINITY, f64::min)
}

fn in_window(c: &TieCandidate, earliest: f64, window: f64) -> bool {
    c.arrival() - earliest <= window
}

/// Candidates that arrived no later than `window` after the earliest one.
pub fn filter_window(candidates: &[TieCandidate], window: f64) -> Result<Vec<TieCandidate>, CoreError> {
    if candidates.is_empty() {
        return Err(CoreError::NoCandidates);
    }
    let earliest = earliest_arrival(candidates);
    Ok(candidates.iter().filter(|c| in_window(c, earliest, window)).copied().collect())
}

fn pick<'a, R: Rng + ?Sized>(pool: &[&'a TieCandidate], rng: &mut R) -> &'a TieCandidate {
    match pool.len() {
        1 => pool[0],
        n => pool[rng.random_range(0..n)],
    }
}

/// The last-generated fork choice for one miner.
///
/// Window survivors without adversarial evidence are preferred; if every
/// survivor shows evidence the choice falls back to all window survivors.
pub fn get_main_chain<'a, R: Rng + ?Sized>(
    candidates: &'a [TieCandidate],
    params: &LocalParams,
    rng: &mut R,
) -> Result<&'a TieCandidate, CoreError> {
    if candidates.is_empty() {
        return Err(CoreError::NoCandidates);
    }
    if candidates.len() == 1 {
        return Ok(&candidates[0]);
    }
    let earliest = earliest_arrival(candidates);
    let survivors: Vec<&TieCandidate> = candidates.iter().filter(|c| in_window(c, earliest, params.window)).collect();
    let prospects: Vec<&TieCandidate> = survivors
        .iter()
        .copied()
        .filter(|c| !is_adversarial_evidence(c.tip.arrival_local, c.timestamp(), params))
        .collect();
    if prospects.is_empty() {
        Ok(pick(&survivors, rng))
    } else {
        Ok(pick(&prospects, rng))
    }
}

pub fn random_rule<'a, R: Rng + ?Sized>(
    candidates: &'a [TieCandidate],
    rng: &mut R,
) -> Result<&'a TieCandidate, CoreError> {
    match candidates.len() {
        0 => Err(CoreError::NoCandidates),
        1 => Ok(&candidates[0]),
        n => Ok(&candidates[rng.random_range(0..n)]),
    }
}

/// Keeps the earliest-arriving tip; exact ties are split uniformly.
pub fn first_seen_rule<'a, R: Rng + ?Sized>(
    candidates: &'a [TieCandidate],
    rng: &mut R,
) -> Result<&'a TieCandidate, CoreError> {
    if candidates.is_empty() {
        return Err(CoreError::NoCandidates);
    }
    let earliest = earliest_arrival(candidates);
    let first: Vec<&TieCandidate> = candidates.iter().filter(|c| c.arrival() == earliest).collect();
    Ok(pick(&first, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Block, ClockOffset, MinerId};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cand(id: u32, arrival_local: f64, timestamp: f64) -> TieCandidate {
        let block = Block::with_raw_parts(
            BlockId(id),
            Some(BlockId::GENESIS),
            1,
            Some(MinerId::honest(id)),
            SimTime(timestamp),
            SimTime(0.0),
        );
        TieCandidate::new(ReceivedBlock::new(block, SimTime(arrival_local), ClockOffset(0.0)))
    }

    fn params(delta_o: f64, delta_b: f64) -> LocalParams {
        LocalParams::new(delta_b, delta_o).unwrap()
    }

    #[test]
    fn evidence_boundaries() {
        let p = params(20.0, 20.0);
        let at = |delta: f64| is_adversarial_evidence(SimTime(1000.0 + delta), SimTime(1000.0), &p);
        assert!(!at(-20.0));
        assert!(!at(40.0));
        assert!(at(40.1));
        assert!(at(-20.1));
        assert!(!at(0.0));
    }

    #[test]
    fn window_examples() {
        let c = [cand(1, 100.0, 0.0), cand(2, 105.0, 0.0), cand(3, 130.0, 0.0)];
        let kept: Vec<_> = filter_window(&c, 20.0).unwrap().iter().map(|c| c.chain_id.0).collect();
        assert_eq!(kept, vec![1, 2]);

        let one = [cand(7, 1e6, 0.0)];
        assert_eq!(filter_window(&one, 0.0).unwrap(), one.to_vec());

        let same = [cand(1, 50.0, 0.0), cand(2, 50.0, 0.0)];
        assert_eq!(filter_window(&same, 0.0).unwrap().len(), 2);

        assert_eq!(filter_window(&[], 20.0), Err(CoreError::NoCandidates));
    }

    #[test]
    fn single_candidate_consumes_no_randomness() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let one = [cand(1, 10.0, 500.0)];
        for rule in [RuleKind::Proposed(params(20.0, 20.0)), RuleKind::Random, RuleKind::FirstSeen] {
            assert_eq!(rule.choose(&one, &mut a).unwrap().chain_id, BlockId(1));
        }
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn honest_tip_wins_against_stale_adversary_tip() {
        let p = params(20.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Honest tip: delta 0. Adversary tip: stamped 500 s before arrival.
        let c = [cand(1, 1000.0, 1000.0), cand(2, 1000.0, 500.0)];
        for _ in 0..1000 {
            assert_eq!(get_main_chain(&c, &p, &mut rng).unwrap().chain_id, BlockId(1));
        }
    }

    fn frequency(rule: RuleKind, c: &[TieCandidate], seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 10_000;
        let hits = (0..n).filter(|_| rule.choose(c, &mut rng).unwrap().chain_id == c[0].chain_id).count();
        hits as f64 / n as f64
    }

    #[test]
    fn fallback_is_fair_when_all_flagged() {
        let c = [cand(1, 1000.0, 500.0), cand(2, 1000.0, 500.0)];
        let f = frequency(RuleKind::Proposed(params(20.0, 20.0)), &c, 5);
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn random_rule_is_fair_and_reproducible() {
        let c = [cand(1, 1.0, 0.0), cand(2, 2.0, 0.0)];
        let f = frequency(RuleKind::Random, &c, 9);
        assert!((f - 0.5).abs() <= 0.02, "{f}");

        let seq = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| random_rule(&c, &mut rng).unwrap().chain_id).collect::<Vec<_>>()
        };
        assert_eq!(seq(42), seq(42));
        assert_eq!(random_rule(&[], &mut ChaCha8Rng::seed_from_u64(0)), Err(CoreError::NoCandidates));
    }

    #[test]
    fn first_seen_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = [cand(1, 105.0, 0.0), cand(2, 100.0, 0.0)];
        assert_eq!(first_seen_rule(&c, &mut rng).unwrap().chain_id, BlockId(2));
        let tied = [cand(1, 70.0, 0.0), cand(2, 70.0, 0.0)];
        let f = frequency(RuleKind::FirstSeen, &tied, 2);
        assert!((f - 0.5).abs() <= 0.02, "{f}");
        assert_eq!(first_seen_rule(&[], &mut rng), Err(CoreError::NoCandidates));
    }

    #[test]
    fn late_chain_never_wins_even_if_clean() {
        // Candidate 2 is honest-looking but outside the window; candidate 1 is flagged.
        let p = params(20.0, 20.0);
        let c = [cand(1, 100.0, -400.0), cand(2, 150.0, 150.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(get_main_chain(&c, &p, &mut rng).unwrap().chain_id, BlockId(1));
        }
    }

    fn arb_candidates() -> impl Strategy<Value = Vec<TieCandidate>> {
        proptest::collection::vec((0.0f64..200.0, -300.0f64..300.0), 1..6)
            .prop_map(|v| v.into_iter().enumerate().map(|(i, (a, d))| cand(i as u32 + 1, a, a - d)).collect())
    }

    proptest! {
        #[test]
        fn window_output_properties(c in arb_candidates(), w in 0.0f64..100.0) {
            let out = filter_window(&c, w).unwrap();
            let earliest = c.iter().map(|x| x.arrival()).fold(f64::INFINITY, f64::min);
            prop_assert!(out.iter().any(|x| x.arrival() == earliest));
            prop_assert!(out.iter().all(|x| c.contains(x)));
            prop_assert_eq!(filter_window(&out, w).unwrap(), out.clone());
        }

        #[test]
        fn choice_is_a_window_survivor(c in arb_candidates(), seed in any::<u64>(), d_o in 0.0f64..100.0, d_b in 0.0f64..50.0) {
            let p = params(d_o, d_b);
            let survivors = filter_window(&c, p.window).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chosen = get_main_chain(&c, &p, &mut rng).unwrap();
            prop_assert!(survivors.contains(chosen));
            let clean: Vec<_> = survivors
                .iter()
                .filter(|x| !is_adversarial_evidence(x.tip.arrival_local, x.timestamp(), &p))
                .collect();
            if clean.len() == 1 {
                prop_assert_eq!(chosen.chain_id, clean[0].chain_id);
            }
            if !clean.is_empty() {
                prop_assert!(!is_adversarial_evidence(chosen.tip.arrival_local, chosen.timestamp(), &p));
            }
        }
    }

    #[test]
    fn order_of_candidates_does_not_shift_distribution() {
        let p = params(20.0, 20.0);
        let c = vec![cand(1, 100.0, 100.0), cand(2, 101.0, 95.0), cand(3, 150.0, 150.0), cand(4, 102.0, 0.0)];
        let mut rev = c.clone();
        rev.reverse();
        let count = |list: &[TieCandidate], seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits = [0usize; 5];
            for _ in 0..20_000 {
                hits[get_main_chain(list, &p, &mut rng).unwrap().chain_id.0 as usize] += 1;
            }
            hits.map(|h| h as f64 / 20_000.0)
        };
        let (a, b) = (count(&c, 1), count(&rev, 2));
        for i in 1..5 {
            assert!((a[i] - b[i]).abs() < 0.02, "{a:?} vs {b:?}");
        }
        // Only the two clean survivors are ever chosen.
        assert_eq!(a[3], 0.0);
        assert_eq!(a[4], 0.0);
    }
}
