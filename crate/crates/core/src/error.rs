use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("input {value} outside hash domain [0, {modulus})")]
    HashDomain { value: u64, modulus: u64 },

    #[error("occupied bucket count {occupied} exceeds bucket count {buckets}")]
    OccupancyOverflow { occupied: u64, buckets: u64 },

    #[error("partition oracle needs i >= 2, got {0}")]
    PartitionIndex(usize),

    #[error("threshold {requested} beyond profile range {available}")]
    ThresholdOutOfRange { requested: u64, available: u64 },

    #[error("inconsistent stream spec: {0}")]
    InvalidStreamSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
