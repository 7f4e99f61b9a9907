//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },

    #[error("corpus has {found} distinct emojis, {requested} requested for the label set")]
    NotEnoughEmojis { found: usize, requested: usize },

    #[error("balance cap must be positive")]
    InvalidCap,

    #[error("split ratios must be positive and sum to 1 (got {0:?})")]
    InvalidRatios([f64; 3]),

    #[error("synthetic corpus template has no classes")]
    EmptyTemplate,

    #[error("cannot segment an empty hashtag")]
    EmptyTag,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {value}")]
    NonFiniteLoss { epoch: usize, batch: usize, value: f64 },

    #[error("prediction/gold length mismatch: {preds} vs {golds}")]
    LengthMismatch { preds: usize, golds: usize },

    #[error("checkpoint is incompatible: {0}")]
    IncompatibleCheckpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
