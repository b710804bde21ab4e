//! Shared vocabulary: simulated time, clock offsets, blocks and the block store.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::audit;
use crate::error::CoreError;

/// A point on a time axis, in seconds.
///
/// True time starts at 0 and is never negative. Local-clock readings are the
/// same type but may be negative, since an offset applies from the epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct SimTime(pub f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: f64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}s", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Honest,
    Adversary,
}

/// Miner identity. Honest miners are numbered `0..n_honest`; the adversary
/// carries its own index in the same space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinerId {
    pub index: u32,
    pub role: Role,
}

impl MinerId {
    pub fn honest(index: u32) -> Self {
        Self { index, role: Role::Honest }
    }

    pub fn adversary(index: u32) -> Self {
        Self { index, role: Role::Adversary }
    }

    pub fn is_adversary(&self) -> bool {
        self.role == Role::Adversary
    }
}

/// A miner's clock minus true time, fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct ClockOffset(pub f64);

/// Reading of a clock with the given offset at true time `t_true`.
pub fn to_local(t_true: SimTime, offset: ClockOffset) -> SimTime {
    t_true + offset.0
}

/// Largest pairwise clock disagreement among `offsets`.
pub fn max_pairwise_skew(offsets: &[ClockOffset]) -> Result<f64, CoreError> {
    let mut it = offsets.iter().map(|o| o.0);
    let first = it.next().ok_or(CoreError::NoMiners)?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), o| (lo.min(o), hi.max(o)));
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(pub u32);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A mined block. Contents are abstract; only chain position and timing matter.
///
/// `timestamp` is whatever the creator chose to write and is not trusted.
/// `created_at` is the true generation time, kept for measurement only and
/// readable through an audited accessor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub height: u32,
    pub creator: Option<MinerId>,
    pub timestamp: SimTime,
    created_at: SimTime,
}

impl Block {
    pub fn genesis() -> Self {
        Self {
            id: BlockId::GENESIS,
            parent: None,
            height: 0,
            creator: None,
            timestamp: SimTime::ZERO,
            created_at: SimTime::ZERO,
        }
    }

    pub fn new(id: BlockId, parent: &Block, creator: MinerId, timestamp: SimTime, created_at: SimTime) -> Self {
        Self { id, parent: Some(parent.id), height: parent.height + 1, creator: Some(creator), timestamp, created_at }
    }

    /// Builds a block with arbitrary linkage, e.g. to exercise lineage checks.
    pub fn with_raw_parts(
        id: BlockId,
        parent: Option<BlockId>,
        height: u32,
        creator: Option<MinerId>,
        timestamp: SimTime,
        created_at: SimTime,
    ) -> Self {
        Self { id, parent, height, creator, timestamp, created_at }
    }

    /// True generation time. Reads made while an honest miner is deciding are
    /// recorded as audit violations.
    pub fn created_at(&self) -> SimTime {
        audit::note_hidden_read();
        self.created_at
    }

    pub fn is_adversarial(&self) -> bool {
        self.creator.is_some_and(|c| c.is_adversary())
    }
}

/// A block as one miner saw it arrive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceivedBlock {
    pub block: Block,
    /// Arrival time on the receiving miner's own clock.
    pub arrival_local: SimTime,
    arrival_true: SimTime,
}

impl ReceivedBlock {
    pub fn new(block: Block, arrival_true: SimTime, receiver_offset: ClockOffset) -> Self {
        Self { block, arrival_local: to_local(arrival_true, receiver_offset), arrival_true }
    }

    pub fn arrival_true(&self) -> SimTime {
        audit::note_hidden_read();
        self.arrival_true
    }
}

/// Per-miner settings for the last-generated rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalParams {
    /// Assumed upper bound on block propagation time, seconds.
    pub delta_b: f64,
    /// Assumed upper bound on pairwise clock skew, seconds.
    pub delta_o: f64,
    /// Acceptance window for tied chains, seconds.
    pub window: f64,
}

impl LocalParams {
    /// Parameters with the window equal to `delta_b`.
    pub fn new(delta_b: f64, delta_o: f64) -> Result<Self, CoreError> {
        Self::with_window(delta_b, delta_o, delta_b)
    }

    pub fn with_window(delta_b: f64, delta_o: f64, window: f64) -> Result<Self, CoreError> {
        for (name, v) in [("delta_b", delta_b), ("delta_o", delta_o), ("window", window)] {
            if !v.is_finite() || v < 0.0 {
                return Err(CoreError::InvalidParam { name, value: v });
            }
        }
        Ok(Self { delta_b, delta_o, window })
    }
}

impl Default for LocalParams {
    fn default() -> Self {
        Self { delta_b: 20.0, delta_o: 20.0, window: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineageViolation {
    MissingGenesis,
    /// Block id does not match its slot in the store.
    IdMismatch {
        slot: u32,
        id: BlockId,
    },
    DanglingParent {
        block: BlockId,
        parent: BlockId,
    },
    HeightMismatch {
        block: BlockId,
        expected: u32,
        found: u32,
    },
    /// A non-genesis block without a parent.
    Orphan {
        block: BlockId,
    },
}

impl fmt::Display for LineageViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingGenesis => write!(f, "missing genesis"),
            Self::IdMismatch { slot, id } => write!(f, "id mismatch: slot {slot} holds {id}"),
            Self::DanglingParent { block, parent } => {
                write!(f, "dangling parent: {block} points at unknown {parent}")
            }
            Self::HeightMismatch { block, expected, found } => {
                write!(f, "height mismatch: {block} has height {found}, expected {expected}")
            }
            Self::Orphan { block } => write!(f, "orphan: {block} has no parent"),
        }
    }
}

/// Append-only arena of blocks indexed by [`BlockId`]; slot 0 is genesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStore {
    blocks: Vec<Block>,
}

impl Default for BlockStore {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockStore {
    pub fn new() -> Self {
        Self { blocks: vec![Block::genesis()] }
    }

    /// Wraps raw blocks without checking them; see [`BlockStore::validate_lineage`].
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    pub fn next_id(&self) -> BlockId {
        BlockId(self.blocks.len() as u32)
    }

    /// Creates a child of `parent` and stores it.
    pub fn mint(&mut self, parent: BlockId, creator: MinerId, timestamp: SimTime, created_at: SimTime) -> Block {
        let block = Block::new(self.next_id(), &self[parent], creator, timestamp, created_at);
        self.blocks.push(block);
        block
    }

    pub fn get(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(id.0 as usize)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter()
    }

    /// True if `ancestor` lies on the parent path of `block` (or is `block`).
    pub fn is_ancestor(&self, ancestor: BlockId, mut block: BlockId) -> bool {
        let target = self[ancestor].height;
        loop {
            if block == ancestor {
                return true;
            }
            let b = &self[block];
            match b.parent {
                Some(p) if b.height > target => block = p,
                _ => return false,
            }
        }
    }

    /// Checks ids, parent links and heights; stops at the first violation.
    pub fn validate_lineage(&self) -> Result<(), LineageViolation> {
        let genesis = self.blocks.first().ok_or(LineageViolation::MissingGenesis)?;
        if genesis.parent.is_some() || genesis.height != 0 || genesis.id != BlockId::GENESIS {
            return Err(LineageViolation::MissingGenesis);
        }
        for (slot, b) in self.blocks.iter().enumerate().skip(1) {
            if b.id.0 as usize != slot {
                return Err(LineageViolation::IdMismatch { slot: slot as u32, id: b.id });
            }
            let parent = b.parent.ok_or(LineageViolation::Orphan { block: b.id })?;
            let Some(p) = self.get(parent) else {
                return Err(LineageViolation::DanglingParent { block: b.id, parent });
            };
            if b.height != p.height + 1 {
                return Err(LineageViolation::HeightMismatch { block: b.id, expected: p.height + 1, found: b.height });
            }
        }
        Ok(())
    }
}

impl std::ops::Index<BlockId> for BlockStore {
    type Output = Block;

    fn index(&self, id: BlockId) -> &Block {
        &self.blocks[id.0 as usize]
    }
}
