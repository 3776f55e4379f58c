use alloc::string::String;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("backward called without a cached forward pass for {0}")]
    MissingForward(&'static str),
    #[error("target index {index} out of range for {classes} classes")]
    TargetOutOfRange { index: usize, classes: usize },
    #[error("empty selection: {0}")]
    Empty(&'static str),
    #[error("label {label} not allowed in {context}")]
    InvalidLabel { label: char, context: &'static str },
    #[error("class {0} has no samples")]
    EmptyClass(char),
    #[error("non-finite loss in term {0}")]
    NonFiniteLoss(&'static str),
    #[error("rank-deficient design matrix: rank {rank} of {cols} columns ({rows} rows)")]
    RankDeficient { rank: usize, cols: usize, rows: usize },
    #[error("series length {0} outside the supported range [15, 45]")]
    SeriesLength(usize),
    #[error("day indices must be strictly increasing")]
    UnorderedDays,
    #[error("invalid series {counter}: {reason}")]
    InvalidSeries { counter: String, reason: &'static str },
    #[error("duplicate counter {0}")]
    DuplicateCounter(String),
    #[error("missing counter {0}")]
    MissingCounter(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}
