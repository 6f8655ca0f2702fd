use thiserror::Error;

/// Errors raised by the memory, embeddings, environments and agent.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecodeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("embedding contains a non-finite value at coordinate {index}")]
    NonFinite { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("memory is empty")]
    EmptyMemory,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("episode already terminated")]
    EpisodeTerminated,

    #[error("non-finite gradient in block {0}")]
    NonFiniteGradient(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("snapshot parse error at line {line}: {msg}")]
    Snapshot { line: usize, msg: String },

    #[error("model file error at line {line}: {msg}")]
    ModelFile { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, RecodeError>;
