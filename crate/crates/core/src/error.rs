use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("system needs at least two modes, got {0}")]
    TooFewModes(usize),

    #[error("dwell bounds violated: min={min}, max={max} (need 1 <= min <= max)")]
    DwellBounds { min: u32, max: u32 },

    #[error("inadmissible switching signal: {0}")]
    InadmissibleSignal(String),

    #[error("cycle count {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: usize },

    #[error("certificate does not match cycle family: {0}")]
    IndexMismatch(String),

    #[error("sequence for cycle {h} has length {got}, expected {expected}")]
    SequenceLength { h: usize, got: usize, expected: usize },

    #[error("certificate conversion failed after {attempts} attempts (best coupling margin {best_margin:e})")]
    ConversionFailed { attempts: usize, best_margin: f64 },

    #[error("periodic repetition of cycle is inadmissible: {0}")]
    InadmissibleRepetition(String),

    #[error("certificate was issued for a different system (hash {found}, expected {expected})")]
    HashMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
