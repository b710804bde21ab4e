//! Block-withholding attacker that forces chain ties.
//!
//! A freshly mined block is kept private. When an honest block appears at the
//! same height, the private block is released at once to create a tie. A
//! second private block in a row makes the private chain two blocks longer
//! and both are published. While a released block is still tied the attacker
//! extends it and publishes immediately.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::{Block, BlockId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimestampStrategy {
    /// Stamp with the attacker's own clock.
    HonestClock,
    /// Stamp `seconds` ahead of the attacker's clock.
    FixedOffset { seconds: f64 },
    /// Stamp `delta_o + 2 * delta_b` ahead, the shift that keeps a withheld
    /// block clean for the longest stretch against miners using those bounds.
    TheoremOptimal { delta_o: f64, delta_b: f64 },
}

impl TimestampStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::HonestClock => "honest_clock",
            Self::FixedOffset { .. } => "fixed_offset",
            Self::TheoremOptimal { .. } => "theorem_optimal",
        }
    }

    pub fn shift(&self) -> f64 {
        match *self {
            Self::HonestClock => 0.0,
            Self::FixedOffset { seconds } => seconds,
            Self::TheoremOptimal { delta_o, delta_b } => delta_o + 2.0 * delta_b,
        }
    }
}

pub fn choose_timestamp(adversary_clock_now: SimTime, strategy: &TimestampStrategy) -> SimTime {
    adversary_clock_now + strategy.shift()
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryAction {
    /// Keep the new block private.
    Withhold(BlockId),
    /// Release a withheld block to tie with an honest block of equal height.
    Release(Block),
    /// Publish blocks (parent first) that make the attacker's chain strictly longest.
    Publish(Vec<Block>),
    /// Switch the mining base to an honest tip.
    Adopt(BlockId),
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryState {
    private_tip: Block,
    public_tip: Block,
    withheld: Vec<Block>,
    released: Option<Block>,
}

impl AdversaryState {
    pub fn new(genesis: Block) -> Self {
        Self { private_tip: genesis, public_tip: genesis, withheld: Vec::new(), released: None }
    }

    /// Private height minus the best public height.
    pub fn lead(&self) -> usize {
        self.withheld.len()
    }

    pub fn private_tip(&self) -> &Block {
        &self.private_tip
    }

    pub fn public_tip(&self) -> &Block {
        &self.public_tip
    }

    pub fn withheld(&self) -> &[Block] {
        &self.withheld
    }

    /// Block released into a tie that no later block has settled yet.
    pub fn released(&self) -> Option<&Block> {
        self.released.as_ref()
    }

    pub fn on_own_block(&mut self, block: Block) -> Result<Vec<AdversaryAction>, CoreError> {
        if block.parent != Some(self.private_tip.id) {
            return Err(CoreError::NotOnPrivateTip { block: block.id, tip: self.private_tip.id });
        }
        self.private_tip = block;
        if self.released.take().is_some() {
            self.public_tip = block;
            return Ok(vec![AdversaryAction::Publish(vec![block])]);
        }
        self.withheld.push(block);
        if self.withheld.len() >= 2 {
            self.public_tip = block;
            return Ok(vec![AdversaryAction::Publish(std::mem::take(&mut self.withheld))]);
        }
        Ok(vec![AdversaryAction::Withhold(block.id)])
    }

    pub fn on_honest_block(&mut self, honest: Block) -> Vec<AdversaryAction> {
        if let Some(&pending) = self.withheld.first() {
            if honest.height == pending.height {
                self.withheld.clear();
                self.released = Some(pending);
                self.public_tip = honest;
                return vec![AdversaryAction::Release(pending)];
            }
            if honest.height < pending.height {
                return vec![AdversaryAction::Ignore];
            }
            // Overtaken; the private blocks are worthless now.
            self.withheld.clear();
        }
        let best = self.released.map_or(self.public_tip.height, |r| r.height);
        if honest.height > best {
            self.released = None;
            self.public_tip = honest;
            self.private_tip = honest;
            vec![AdversaryAction::Adopt(honest.id)]
        } else {
            vec![AdversaryAction::Ignore]
        }
    }
}
