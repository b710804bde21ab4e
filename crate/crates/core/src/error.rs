use thiserror::Error;

use crate::types::BlockId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("no miners")]
    NoMiners,
    #[error("no candidates")]
    NoCandidates,
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("mean interval must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("no choices recorded")]
    NoChoices,
    #[error("block {block} does not extend the private tip {tip}")]
    NotOnPrivateTip { block: BlockId, tip: BlockId },
    #[error("invalid configuration: {0}")]
    Config(String),
}
