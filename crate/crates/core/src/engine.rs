//! Deterministic discrete-event simulation of honest miners racing a
//! withholding attacker.
//!
//! Every miner owns an exponential block timer. Honest blocks reach other
//! honest miners after `propagation_delay`; the attacker sees honest blocks at
//! once and its own releases reach everyone at once. Each honest miner keeps a
//! local view (best height, tied tips with local arrival times) and runs its
//! tie-breaking rule when a competing tip of equal height shows up.
//!
//! Events at the same instant run in the order generation, arrival, tie
//! resolution, then by sequence number.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::adversary::{choose_timestamp, AdversaryAction, AdversaryState, TimestampStrategy};
use crate::audit;
use crate::error::CoreError;
use crate::forkchoice::{RuleKind, RuleName, TieCandidate};
use crate::metrics::{expected_gamma_ideal, theorem2_bound, GammaAccumulator, SimReport, TieEvent};
use crate::types::{to_local, BlockId, BlockStore, ClockOffset, LocalParams, MinerId, ReceivedBlock, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetDistribution {
    /// Every honest clock is exact.
    Zero,
    /// Offsets drawn once per miner from a centred normal.
    Normal { std: f64 },
}

impl OffsetDistribution {
    pub fn std(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Normal { std } => std,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Stop once this many attacker-forced ties have been recorded.
    Ties(u64),
    /// Stop once this many blocks have been generated.
    Blocks(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_honest: u32,
    /// Attacker share of total hashrate; honest miners split the rest equally.
    pub adversary_fraction: f64,
    /// Mean whole-network block interval, seconds.
    pub mean_block_interval: f64,
    /// Honest-to-honest propagation delay, seconds.
    pub propagation_delay: f64,
    pub offsets: OffsetDistribution,
    pub rule: RuleName,
    /// Parameters every honest miner uses unless `miner_params` is set.
    pub local_params: LocalParams,
    /// Optional per-miner parameters, one entry per honest miner.
    pub miner_params: Option<Vec<LocalParams>>,
    /// The attacker's clock offset.
    pub adversary_clock_offset: f64,
    pub timestamp_strategy: TimestampStrategy,
    pub stop: StopCondition,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let local_params = LocalParams::default();
        Self {
            n_honest: 1000,
            adversary_fraction: 0.5,
            mean_block_interval: 600.0,
            propagation_delay: 0.0,
            offsets: OffsetDistribution::Zero,
            rule: RuleName::Proposed,
            local_params,
            miner_params: None,
            adversary_clock_offset: 0.0,
            timestamp_strategy: TimestampStrategy::TheoremOptimal {
                delta_o: local_params.delta_o,
                delta_b: local_params.delta_b,
            },
            stop: StopCondition::Ties(10_000),
            seed: 0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CoreError {
    CoreError::Config(msg.into())
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.n_honest == 0 {
            return Err(config_err("n_honest must be at least 1"));
        }
        if !(self.mean_block_interval.is_finite() && self.mean_block_interval > 0.0) {
            return Err(CoreError::NonPositiveInterval(self.mean_block_interval));
        }
        if !(0.0..1.0).contains(&self.adversary_fraction) {
            return Err(config_err(format!("adversary_fraction must lie in [0, 1), got {}", self.adversary_fraction)));
        }
        if !(self.propagation_delay.is_finite() && self.propagation_delay >= 0.0) {
            return Err(config_err(format!("propagation_delay must be >= 0, got {}", self.propagation_delay)));
        }
        let std = self.offsets.std();
        if !(std.is_finite() && std >= 0.0) {
            return Err(config_err(format!("offset std must be >= 0, got {std}")));
        }
        if !self.adversary_clock_offset.is_finite() || !self.timestamp_strategy.shift().is_finite() {
            return Err(config_err("adversary clock offset and stamp shift must be finite"));
        }
        LocalParams::with_window(self.local_params.delta_b, self.local_params.delta_o, self.local_params.window)?;
        if let Some(per_miner) = &self.miner_params {
            if per_miner.len() != self.n_honest as usize {
                return Err(config_err(format!(
                    "miner_params has {} entries for {} honest miners",
                    per_miner.len(),
                    self.n_honest
                )));
            }
            for p in per_miner {
                LocalParams::with_window(p.delta_b, p.delta_o, p.window)?;
            }
        }
        match self.stop {
            StopCondition::Ties(0) | StopCondition::Blocks(0) => {
                return Err(config_err("stop condition must be positive"))
            }
            StopCondition::Ties(_) if self.adversary_fraction == 0.0 => {
                return Err(config_err("no ties can occur without an attacker; stop on blocks instead"))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn honest_rate(&self) -> f64 {
        (1.0 - self.adversary_fraction) / self.mean_block_interval
    }

    pub fn adversary_rate(&self) -> f64 {
        self.adversary_fraction / self.mean_block_interval
    }

    /// Mean interval between honest blocks alone.
    pub fn honest_interval(&self) -> f64 {
        1.0 / self.honest_rate()
    }

    /// Mean gap between a withheld block and the honest block that ties it:
    /// the tie happens only when the honest race is won first, so the gap is
    /// the minimum of both exponential clocks.
    pub fn tie_gap_interval(&self) -> f64 {
        1.0 / (self.honest_rate() + self.adversary_rate())
    }
}

/// Exponential waiting time until a miner with `rate` blocks/second finds a block.
pub fn next_generation_delay<R: rand::Rng + ?Sized>(rng: &mut R, rate: f64) -> Result<f64, CoreError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(CoreError::NonPositiveRate(rate));
    }
    let exp = Exp::new(rate).map_err(|_| CoreError::NonPositiveRate(rate))?;
    Ok(exp.sample(rng))
}

/// One block sent to a set of honest miners, all arriving together.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub block: BlockId,
    pub at: SimTime,
    pub receivers: Vec<u32>,
}

impl Delivery {
    /// `(receiver, arrival_true, arrival_local)` for every receiver.
    pub fn arrivals<'a>(&'a self, offsets: &'a [ClockOffset]) -> impl Iterator<Item = (u32, SimTime, SimTime)> + 'a {
        self.receivers.iter().map(move |&r| (r, self.at, to_local(self.at, offsets[r as usize])))
    }
}

/// Schedules `block` to reach every receiver `delay` seconds after `send_time`.
/// Returns `None` when there is nobody to deliver to.
pub fn deliver(
    block: BlockId,
    send_time: SimTime,
    receivers: impl IntoIterator<Item = u32>,
    delay: f64,
) -> Option<Delivery> {
    debug_assert!(delay >= 0.0);
    let receivers: Vec<u32> = receivers.into_iter().collect();
    (!receivers.is_empty()).then(|| Delivery { block, at: send_time + delay, receivers })
}

/// Outcome of one honest miner's tie decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieChoice {
    pub miner: MinerId,
    pub chosen: BlockId,
    /// Whether the chosen tip is the attacker's block, if one is in the tie.
    pub chose_adversary: bool,
}

/// Runs `rule` for `receiver` over the tips it currently holds.
pub fn resolve_tie<R: rand::Rng + ?Sized>(
    receiver: MinerId,
    rule: &RuleKind,
    candidates: &[TieCandidate],
    rng: &mut R,
) -> Result<TieChoice, CoreError> {
    let chosen = audit::decision_scope(|| rule.choose(candidates, rng))?;
    Ok(TieChoice { miner: receiver, chosen: chosen.chain_id, chose_adversary: chosen.tip.block.is_adversarial() })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Generation {
        miner: MinerId,
    },
    Arrival(Delivery),
    /// Resolve ties for every miner flagged at this instant.
    TieResolution,
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            Self::Generation { .. } => 0,
            Self::Arrival(_) => 1,
            Self::TieResolution => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub at: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (f64, u8, u64) {
        (self.at.0, self.kind.rank(), self.seq)
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        // Reversed so the max-heap pops the earliest event.
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-time priority queue with stable ordering among simultaneous events.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, at: SimTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { at, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeldTip {
    block: BlockId,
    arrival_true: SimTime,
}

#[derive(Debug, Clone)]
struct HonestMiner {
    offset: ClockOffset,
    rule: RuleKind,
    tip: BlockId,
    best_height: u32,
    /// Tips at `best_height` in arrival order.
    tied: Vec<HeldTip>,
    resolution_pending: bool,
    /// Blocks received before their parent.
    orphans: Vec<HeldTip>,
}

#[derive(Debug)]
struct Episode {
    tie_id: u64,
    adversary_block: BlockId,
    created: f64,
    withholding: f64,
    choices: Vec<Option<bool>>,
}

/// Which honest miners hold which blocks, one bit row per block.
#[derive(Debug)]
struct ReceiptTable {
    words: usize,
    bits: Vec<u64>,
}

impl ReceiptTable {
    fn new(n: usize) -> Self {
        Self { words: n.div_ceil(64), bits: Vec::new() }
    }

    fn add_block(&mut self, everyone: bool) {
        let fill = if everyone { u64::MAX } else { 0 };
        self.bits.extend(std::iter::repeat_n(fill, self.words));
    }

    fn has(&self, block: BlockId, miner: u32) -> bool {
        let i = block.0 as usize * self.words + miner as usize / 64;
        self.bits[i] & (1 << (miner % 64)) != 0
    }

    fn set(&mut self, block: BlockId, miner: u32) {
        let i = block.0 as usize * self.words + miner as usize / 64;
        self.bits[i] |= 1 << (miner % 64);
    }
}

/// What a single [`Engine::step`] processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Generation(MinerId),
    Arrival(BlockId),
    TieResolution,
}

pub struct Engine {
    cfg: SimConfig,
    rng: ChaCha8Rng,
    now: SimTime,
    queue: EventQueue,
    store: BlockStore,
    receipts: ReceiptTable,
    miners: Vec<HonestMiner>,
    offsets: Vec<ClockOffset>,
    honest_ids: Vec<u32>,
    adversary: AdversaryState,
    adversary_id: MinerId,
    honest_rate_each: f64,
    pending: Vec<u32>,
    resolution_scheduled: bool,
    episode: Option<Episode>,
    next_tie_id: u64,
    ties: Vec<TieEvent>,
    acc: GammaAccumulator,
    n_blocks_honest: u64,
    n_blocks_adversary: u64,
}

impl Engine {
    pub fn new(cfg: SimConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = cfg.n_honest as usize;
        let offsets: Vec<ClockOffset> = match cfg.offsets {
            OffsetDistribution::Zero => vec![ClockOffset(0.0); n],
            OffsetDistribution::Normal { std } => {
                let normal = Normal::new(0.0, std).map_err(|e| config_err(e.to_string()))?;
                (0..n).map(|_| ClockOffset(normal.sample(&mut rng))).collect()
            }
        };
        let miners = offsets
            .iter()
            .enumerate()
            .map(|(i, &offset)| {
                let params = cfg.miner_params.as_ref().map_or(cfg.local_params, |p| p[i]);
                HonestMiner {
                    offset,
                    rule: cfg.rule.with_params(params),
                    tip: BlockId::GENESIS,
                    best_height: 0,
                    tied: vec![HeldTip { block: BlockId::GENESIS, arrival_true: SimTime::ZERO }],
                    resolution_pending: false,
                    orphans: Vec::new(),
                }
            })
            .collect();
        let store = BlockStore::new();
        let mut receipts = ReceiptTable::new(n);
        receipts.add_block(true);
        let adversary = AdversaryState::new(store[BlockId::GENESIS]);
        let honest_rate_each = cfg.honest_rate() / n as f64;
        let mut engine = Self {
            adversary_id: MinerId::adversary(cfg.n_honest),
            honest_ids: (0..cfg.n_honest).collect(),
            cfg,
            rng,
            now: SimTime::ZERO,
            queue: EventQueue::default(),
            store,
            receipts,
            miners,
            offsets,
            adversary,
            honest_rate_each,
            pending: Vec::new(),
            resolution_scheduled: false,
            episode: None,
            next_tie_id: 0,
            ties: Vec::new(),
            acc: GammaAccumulator::default(),
            n_blocks_honest: 0,
            n_blocks_adversary: 0,
        };
        for i in 0..engine.cfg.n_honest {
            engine.schedule_generation(MinerId::honest(i))?;
        }
        if engine.cfg.adversary_fraction > 0.0 {
            engine.schedule_generation(engine.adversary_id)?;
        }
        Ok(engine)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn store(&self) -> &BlockStore {
        &self.store
    }

    pub fn offsets(&self) -> &[ClockOffset] {
        &self.offsets
    }

    pub fn adversary(&self) -> &AdversaryState {
        &self.adversary
    }

    pub fn miner_tip(&self, miner: u32) -> BlockId {
        self.miners[miner as usize].tip
    }

    /// Tips the miner currently holds at its best height.
    pub fn miner_tied_tips(&self, miner: u32) -> Vec<BlockId> {
        self.miners[miner as usize].tied.iter().map(|t| t.block).collect()
    }

    pub fn tie_events(&self) -> &[TieEvent] {
        &self.ties
    }

    pub fn blocks_generated(&self) -> u64 {
        self.n_blocks_honest + self.n_blocks_adversary
    }

    fn rate_of(&self, miner: MinerId) -> f64 {
        if miner.is_adversary() {
            self.cfg.adversary_rate()
        } else {
            self.honest_rate_each
        }
    }

    fn schedule_generation(&mut self, miner: MinerId) -> Result<(), CoreError> {
        let rate = self.rate_of(miner);
        let delay = next_generation_delay(&mut self.rng, rate)?;
        self.queue.push(self.now + delay, EventKind::Generation { miner });
        Ok(())
    }

    fn finished(&self) -> bool {
        match self.cfg.stop {
            StopCondition::Ties(n) => self.ties.len() as u64 >= n,
            StopCondition::Blocks(n) => self.blocks_generated() >= n,
        }
    }

    /// Processes the next event. Returns `None` once the stop condition holds.
    pub fn step(&mut self) -> Option<StepKind> {
        if self.finished() {
            return None;
        }
        let event = self.queue.pop()?;
        debug_assert!(event.at >= self.now);
        self.now = event.at;
        let kind = match event.kind {
            EventKind::Generation { miner } => {
                if miner.is_adversary() {
                    self.adversary_generates();
                } else {
                    self.honest_generates(miner.index);
                }
                self.schedule_generation(miner).expect("rates validated at construction");
                StepKind::Generation(miner)
            }
            EventKind::Arrival(delivery) => {
                for &r in &delivery.receivers {
                    self.receive(r, delivery.block, delivery.at);
                }
                StepKind::Arrival(delivery.block)
            }
            EventKind::TieResolution => {
                self.resolve_pending();
                StepKind::TieResolution
            }
        };
        if !self.pending.is_empty() && !self.resolution_scheduled {
            self.resolution_scheduled = true;
            self.queue.push(self.now, EventKind::TieResolution);
        }
        Some(kind)
    }

    pub fn run_to_end(mut self) -> SimReport {
        while self.step().is_some() {}
        self.into_report()
    }

    fn new_block_row(&mut self) {
        self.receipts.add_block(false);
    }

    fn honest_generates(&mut self, index: u32) {
        self.close_episode();
        let now = self.now;
        let miner = &self.miners[index as usize];
        let stamp = to_local(now, miner.offset);
        let block = self.store.mint(miner.tip, MinerId::honest(index), stamp, now);
        self.new_block_row();
        self.n_blocks_honest += 1;

        let actions = self.adversary.on_honest_block(block);
        self.receive(index, block.id, now);
        let others = self.honest_ids.iter().copied().filter(|&r| r != index);
        if let Some(d) = deliver(block.id, now, others, self.cfg.propagation_delay) {
            self.queue.push(d.at, EventKind::Arrival(d));
        }
        for action in actions {
            match action {
                AdversaryAction::Release(withheld) => {
                    self.episode = Some(Episode {
                        tie_id: self.next_tie_id,
                        adversary_block: withheld.id,
                        created: now.0,
                        withholding: now - withheld.created_at(),
                        choices: vec![None; self.cfg.n_honest as usize],
                    });
                    self.next_tie_id += 1;
                    self.broadcast_now(withheld.id);
                }
                AdversaryAction::Publish(blocks) => blocks.iter().for_each(|b| self.broadcast_now(b.id)),
                AdversaryAction::Withhold(_) | AdversaryAction::Adopt(_) | AdversaryAction::Ignore => {}
            }
        }
    }

    fn adversary_generates(&mut self) {
        self.close_episode();
        let now = self.now;
        let clock = now + self.cfg.adversary_clock_offset;
        let stamp = choose_timestamp(clock, &self.cfg.timestamp_strategy);
        let parent = self.adversary.private_tip().id;
        let block = self.store.mint(parent, self.adversary_id, stamp, now);
        self.new_block_row();
        self.n_blocks_adversary += 1;
        let actions = self.adversary.on_own_block(block).expect("attacker always extends its private tip");
        for action in actions {
            if let AdversaryAction::Publish(blocks) = action {
                blocks.iter().for_each(|b| self.broadcast_now(b.id));
            }
        }
    }

    fn broadcast_now(&mut self, block: BlockId) {
        if let Some(d) = deliver(block, self.now, self.honest_ids.iter().copied(), 0.0) {
            self.queue.push(d.at, EventKind::Arrival(d));
        }
    }

    fn receive(&mut self, miner: u32, block: BlockId, at: SimTime) {
        if self.receipts.has(block, miner) {
            return;
        }
        let parent = self.store[block].parent.unwrap_or(BlockId::GENESIS);
        let held = HeldTip { block, arrival_true: at };
        if !self.receipts.has(parent, miner) {
            self.miners[miner as usize].orphans.push(held);
            return;
        }
        self.receipts.set(block, miner);
        self.accept(miner, held);
        if !self.miners[miner as usize].orphans.is_empty() {
            self.adopt_orphans(miner);
        }
    }

    fn adopt_orphans(&mut self, miner: u32) {
        loop {
            let m = &mut self.miners[miner as usize];
            let ready = m.orphans.iter().position(|o| {
                let parent = self.store[o.block].parent.unwrap_or(BlockId::GENESIS);
                self.receipts.has(parent, miner)
            });
            let Some(pos) = ready else { return };
            let held = m.orphans.remove(pos);
            self.receipts.set(held.block, miner);
            self.accept(miner, held);
        }
    }

    fn accept(&mut self, miner: u32, held: HeldTip) {
        let height = self.store[held.block].height;
        let m = &mut self.miners[miner as usize];
        match height.cmp(&m.best_height) {
            Ordering::Greater => {
                m.best_height = height;
                m.tied.clear();
                m.tied.push(held);
                m.tip = held.block;
            }
            Ordering::Equal => {
                m.tied.push(held);
                if !m.resolution_pending {
                    m.resolution_pending = true;
                    self.pending.push(miner);
                }
            }
            Ordering::Less => {}
        }
    }

    fn resolve_pending(&mut self) {
        self.resolution_scheduled = false;
        let mut pending = std::mem::take(&mut self.pending);
        pending.sort_unstable();
        let mut candidates = Vec::new();
        for &i in &pending {
            let m = &mut self.miners[i as usize];
            m.resolution_pending = false;
            candidates.clear();
            candidates.extend(
                m.tied
                    .iter()
                    .map(|t| TieCandidate::new(ReceivedBlock::new(self.store[t.block], t.arrival_true, m.offset))),
            );
            let choice = resolve_tie(MinerId::honest(i), &m.rule, &candidates, &mut self.rng)
                .expect("a pending miner holds at least two tips");
            m.tip = choice.chosen;
            if let Some(ep) = self.episode.as_mut() {
                let slot = &mut ep.choices[i as usize];
                if slot.is_none() && candidates.iter().any(|c| c.chain_id == ep.adversary_block) {
                    *slot = Some(choice.chosen == ep.adversary_block);
                }
            }
        }
        self.pending = pending;
        self.pending.clear();
    }

    /// The next block settles an open tie; miners that never decided are
    /// recorded by what they are mining on.
    fn close_episode(&mut self) {
        let Some(ep) = self.episode.take() else { return };
        let follows: Vec<bool> =
            ep.choices.iter().zip(&self.miners).map(|(c, m)| c.unwrap_or(m.tip == ep.adversary_block)).collect();
        let weight = (1.0 - self.cfg.adversary_fraction) / self.cfg.n_honest as f64;
        let event = TieEvent::new(ep.tie_id, ep.created, ep.withholding, follows, weight);
        self.acc.push(event.gamma);
        self.ties.push(event);
    }

    fn into_report(self) -> SimReport {
        let cfg = self.cfg;
        let gamma = self.acc.summary();
        let mean_withholding = (!self.ties.is_empty())
            .then(|| self.ties.iter().map(|t| t.withholding).sum::<f64>() / self.ties.len() as f64);
        let p = cfg.local_params;
        let tie_gap_interval = cfg.tie_gap_interval();
        SimReport {
            theorem2_bound: theorem2_bound(p.delta_o, p.delta_b, cfg.mean_block_interval)
                .expect("validated parameters"),
            expected_gamma_ideal: expected_gamma_ideal(p.delta_o, p.delta_b, tie_gap_interval)
                .expect("validated parameters"),
            network_interval: cfg.mean_block_interval,
            honest_interval: cfg.honest_interval(),
            tie_gap_interval,
            tie_events: self.ties,
            gamma,
            n_blocks_honest: self.n_blocks_honest,
            n_blocks_adversary: self.n_blocks_adversary,
            end_time: self.now.0,
            mean_withholding,
            config: cfg,
        }
    }
}

/// Runs one simulation to its stop condition.
pub fn run(config: &SimConfig) -> Result<SimReport, CoreError> {
    Ok(Engine::new(config.clone())?.run_to_end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(rule: RuleName, ties: u64, seed: u64) -> SimConfig {
        SimConfig { n_honest: 50, rule, stop: StopCondition::Ties(ties), seed, ..SimConfig::default() }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SimConfig { n_honest: 0, ..SimConfig::default() };
        assert!(matches!(Engine::new(bad), Err(CoreError::Config(_))));
        let bad = SimConfig { mean_block_interval: 0.0, ..SimConfig::default() };
        assert!(matches!(Engine::new(bad), Err(CoreError::NonPositiveInterval(_))));
        let bad = SimConfig { adversary_fraction: 0.0, ..SimConfig::default() };
        assert!(Engine::new(bad).is_err());
        let bad = SimConfig { miner_params: Some(vec![LocalParams::default(); 3]), ..SimConfig::default() };
        assert!(Engine::new(bad).is_err());
    }

    #[test]
    fn generation_delay_mean_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let mean = (0..n).map(|_| next_generation_delay(&mut rng, 1.0 / 600.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 600.0).abs() <= 2.0, "{mean}");
        assert!(next_generation_delay(&mut rng, 0.0).is_err());
        assert!(next_generation_delay(&mut rng, -1.0).is_err());

        let seq = |s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            (0..16).map(|_| next_generation_delay(&mut r, 0.01).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(5), seq(5));
    }

    #[test]
    fn equal_rates_split_races_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let wins = (0..10_000)
            .filter(|_| {
                let a = next_generation_delay(&mut rng, 1.0 / 1200.0).unwrap();
                let b = next_generation_delay(&mut rng, 1.0 / 1200.0).unwrap();
                a < b
            })
            .count();
        assert!((wins as f64 / 1e4 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn deliver_examples() {
        let d = deliver(BlockId(3), SimTime(100.0), 0..1000, 0.0).unwrap();
        let offsets = vec![ClockOffset(0.0); 1000];
        assert_eq!(d.arrivals(&offsets).count(), 1000);
        assert!(d.arrivals(&offsets).all(|(_, t, _)| t == SimTime(100.0)));

        let d = deliver(BlockId(3), SimTime(100.0), [0], 5.0).unwrap();
        let (_, _, local) = d.arrivals(&[ClockOffset(3.0)]).next().unwrap();
        assert_eq!(local, SimTime(108.0));

        assert!(deliver(BlockId(3), SimTime(1.0), std::iter::empty(), 0.0).is_none());
    }

    proptest! {
        #[test]
        fn queue_pops_in_order(times in proptest::collection::vec((0u32..50, 0u8..3), 1..200)) {
            let mut q = EventQueue::default();
            for &(t, k) in &times {
                let kind = match k {
                    0 => EventKind::Generation { miner: MinerId::honest(0) },
                    1 => EventKind::Arrival(Delivery { block: BlockId(0), at: SimTime(t as f64), receivers: vec![] }),
                    _ => EventKind::TieResolution,
                };
                q.push(SimTime(t as f64), kind);
            }
            let mut last = (f64::NEG_INFINITY, 0u8, 0u64);
            while let Some(e) = q.pop() {
                let key = e.key();
                prop_assert!(key.0 > last.0 || (key.0 == last.0 && (key.1, key.2) > (last.1, last.2)));
                last = key;
            }
        }
    }

    #[test]
    fn lineage_holds_and_runs_are_reproducible() {
        let cfg = SimConfig {
            offsets: OffsetDistribution::Normal { std: 30.0 },
            propagation_delay: 3.0,
            ..small(RuleName::Proposed, 300, 9)
        };
        let mut engine = Engine::new(cfg.clone()).unwrap();
        while engine.step().is_some() {}
        assert_eq!(engine.store().validate_lineage(), Ok(()));
        let a = engine.run_to_end();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tie_events.len(), 300);
    }

    #[test]
    fn zero_delay_views_agree_at_every_tie() {
        let cfg = small(RuleName::Proposed, 200, 3);
        let mut engine = Engine::new(cfg).unwrap();
        let mut checked = 0;
        while let Some(kind) = engine.step() {
            if kind == StepKind::TieResolution {
                let first = engine.miner_tied_tips(0);
                assert!(first.len() >= 2);
                for i in 1..50 {
                    let mut a = engine.miner_tied_tips(i);
                    let mut b = first.clone();
                    a.sort();
                    b.sort();
                    assert_eq!(a, b);
                }
                // Exact clocks and shared bounds: every miner reaches the same verdicts.
                let verdicts = |i: u32| {
                    engine
                        .miner_tied_tips(i)
                        .iter()
                        .map(|&b| {
                            let blk = engine.store()[b];
                            crate::forkchoice::is_adversarial_evidence(
                                to_local(engine.now(), engine.offsets()[i as usize]),
                                blk.timestamp,
                                &LocalParams::default(),
                            )
                        })
                        .collect::<Vec<_>>()
                };
                let v0 = verdicts(0);
                assert!((1..50).all(|i| verdicts(i) == v0));
                checked += 1;
            }
        }
        assert!(checked >= 200);
    }

    #[test]
    fn honest_decisions_never_read_hidden_fields() {
        audit::reset();
        let cfg = SimConfig {
            offsets: OffsetDistribution::Normal { std: 50.0 },
            propagation_delay: 2.0,
            ..small(RuleName::Proposed, 200, 4)
        };
        let report = run(&cfg).unwrap();
        assert!(report.tie_events.len() == 200);
        assert_eq!(audit::violations(), 0);
        for rule in [RuleName::Random, RuleName::FirstSeen] {
            run(&small(rule, 50, 1)).unwrap();
        }
        assert_eq!(audit::violations(), 0);
    }

    #[test]
    fn resolve_tie_examples() {
        let mut store = BlockStore::new();
        let adv = MinerId::adversary(10);
        let params = LocalParams::default();
        // Withheld for 500 s with an honest stamp.
        let a = store.mint(BlockId::GENESIS, adv, SimTime(0.0), SimTime(0.0));
        let h = store.mint(BlockId::GENESIS, MinerId::honest(0), SimTime(500.0), SimTime(500.0));
        let cands = [
            TieCandidate::new(ReceivedBlock::new(h, SimTime(500.0), ClockOffset(0.0))),
            TieCandidate::new(ReceivedBlock::new(a, SimTime(500.0), ClockOffset(0.0))),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..1000 {
            let c = resolve_tie(MinerId::honest(i), &RuleKind::Proposed(params), &cands, &mut rng).unwrap();
            assert!(!c.chose_adversary);
            assert_eq!(c.chosen, h.id);
        }

        // First-seen with the attacker strictly earlier.
        let early = [
            TieCandidate::new(ReceivedBlock::new(a, SimTime(500.0), ClockOffset(0.0))),
            TieCandidate::new(ReceivedBlock::new(h, SimTime(505.0), ClockOffset(0.0))),
        ];
        for i in 0..100 {
            assert!(resolve_tie(MinerId::honest(i), &RuleKind::FirstSeen, &early, &mut rng).unwrap().chose_adversary);
        }

        let coin = (0..10_000)
            .filter(|&i| resolve_tie(MinerId::honest(i), &RuleKind::Random, &cands, &mut rng).unwrap().chose_adversary)
            .count();
        assert!((coin as f64 / 1e4 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn first_seen_follows_attacker_under_delay() {
        let cfg = SimConfig { propagation_delay: 5.0, ..small(RuleName::FirstSeen, 200, 8) };
        let report = run(&cfg).unwrap();
        // The creator sees both at once and flips a coin; everyone else saw the attacker first.
        for ev in &report.tie_events {
            assert!(ev.gamma >= 1.0 - 1.0 / 50.0 - 1e-12, "{}", ev.gamma);
        }
    }

    #[test]
    fn block_rate_matches_network_interval() {
        let cfg = SimConfig { n_honest: 10, stop: StopCondition::Blocks(100_000), seed: 12, ..SimConfig::default() };
        let report = run(&cfg).unwrap();
        let blocks = (report.n_blocks_honest + report.n_blocks_adversary) as f64;
        let rate = blocks / report.end_time;
        assert!((rate * 600.0 - 1.0).abs() < 0.02, "{rate}");
        let adv_share = report.n_blocks_adversary as f64 / blocks;
        assert!((adv_share - 0.5).abs() < 0.01);
    }

    #[test]
    fn withholding_gap_has_network_mean() {
        let report = run(&small(RuleName::Random, 5_000, 21)).unwrap();
        let mean = report.mean_withholding.unwrap();
        // Exponential with mean 600; stderr about 8.5.
        assert!((mean - 600.0).abs() < 35.0, "{mean}");
        assert_eq!(report.tie_gap_interval, 600.0);
        assert_eq!(report.honest_interval, 1200.0);
    }

    #[test]
    fn heterogeneous_params_are_read_per_miner() {
        // Half the miners accept anything, half use tight bounds.
        let n = 40;
        let loose = LocalParams::new(20.0, 1e9).unwrap();
        let tight = LocalParams::default();
        let per: Vec<_> = (0..n).map(|i| if i % 2 == 0 { loose } else { tight }).collect();
        let cfg = SimConfig {
            n_honest: n,
            miner_params: Some(per),
            timestamp_strategy: TimestampStrategy::HonestClock,
            stop: StopCondition::Ties(2_000),
            seed: 5,
            ..SimConfig::default()
        };
        let report = run(&cfg).unwrap();
        let mut follow = [0usize; 2];
        for ev in &report.tie_events {
            for (i, &f) in ev.follows_adversary.iter().enumerate() {
                follow[i % 2] += usize::from(f);
            }
        }
        let total = (report.tie_events.len() * n as usize / 2) as f64;
        let (loose_rate, tight_rate) = (follow[0] as f64 / total, follow[1] as f64 / total);
        assert!((loose_rate - 0.5).abs() < 0.03, "{loose_rate}");
        assert!(tight_rate < 0.1, "{tight_rate}");
    }
}
