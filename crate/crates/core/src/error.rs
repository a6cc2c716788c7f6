use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pooled vector has (near) zero norm")]
    ZeroNorm,
    #[error("dimension mismatch at index {index}: expected {expected}, found {found}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("need at least {required} candidates, got {found}")]
    TooFewCandidates { required: usize, found: usize },
    #[error("top-K size {k} out of range for {n} candidates (need 2 <= K <= N-1)")]
    KOutOfRange { k: usize, n: usize },
    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no candidate carries an extractable answer")]
    NoExtractableAnswers,
    #[error("no anchor has a positive pair")]
    NoPositivePairs,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cannot place cluster centers with the requested separation in dimension {dimension}")]
    InfeasibleGeometry { dimension: usize },
    #[error("no 'Path<number>' token in judge reply")]
    NoPathToken,
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
