//! Crate-wide error type.

use std::io;

use thiserror::Error;

/// Errors raised across the toolkit. Parser variants carry the location of
/// the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bin range: need 0 < d_min < d_max and at least 2 bins (got d_min={d_min}, d_max={d_max}, bins={num_bins})")]
    InvalidRange {
        d_min: f64,
        d_max: f64,
        num_bins: usize,
    },

    #[error("invalid depth {0}: must be finite and > 0")]
    InvalidDepth(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {num_bins} bins")]
    LabelOutOfRange { label: usize, num_bins: usize },

    #[error("{0} region has no valid pixels")]
    EmptyRegion(crate::Region),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("missing key `{key}` in {context}")]
    MissingKey { key: String, context: String },

    #[error("malformed image: {0}")]
    MalformedImage(String),

    #[error("unsupported bit depth: {0}")]
    BitDepth(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported logit file version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated input: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),

    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },

    #[error("scene generation failed after {attempts} attempts: {reason}")]
    RejectionLimit { attempts: usize, reason: String },

    #[error("training diverged at step {step}: loss is {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
