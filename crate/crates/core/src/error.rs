use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("infinite cross entropy: q({index}) = 0 while p({index}) > 0")]
    InfiniteLoss { index: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    #[error("{kind} id {id} out of range (size {size})")]
    IdOutOfRange { kind: &'static str, id: usize, size: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unequal batch sizes: batch {index} has {found} pairs, expected {expected}")]
    UnequalBatches { index: usize, found: usize, expected: usize },

    #[error("partition does not cover the pairs: {0}")]
    BadPartition(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("instance too large for exhaustive search: {count} partitions (limit {limit})")]
    TooLarge { count: u128, limit: u128 },
}

pub type Result<T> = core::result::Result<T, Error>;
