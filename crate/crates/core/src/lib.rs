//! Fork choice with a fully local last-generated tie-breaking rule, a
//! tie-forcing withholding attacker, and an event-driven simulator that
//! measures how much honest hashrate the attacker attracts during ties.

pub mod adversary;
pub mod audit;
pub mod engine;
pub mod error;
pub mod forkchoice;
pub mod metrics;
pub mod types;

pub use adversary::{choose_timestamp, AdversaryAction, AdversaryState, TimestampStrategy};
pub use engine::{run, Engine, OffsetDistribution, SimConfig, StopCondition};
pub use error::CoreError;
pub use forkchoice::{
    filter_window, first_seen_rule, get_main_chain, is_adversarial_evidence, random_rule, RuleKind, RuleName,
    TieCandidate,
};
pub use metrics::{aggregate, expected_gamma_ideal, gamma_event, theorem2_bound, GammaSummary, SimReport, TieEvent};
pub use types::{
    max_pairwise_skew, to_local, Block, BlockId, BlockStore, ClockOffset, LocalParams, MinerId, ReceivedBlock, Role,
    SimTime,
};
