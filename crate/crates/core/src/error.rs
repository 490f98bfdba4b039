use thiserror::Error;

/// Errors raised by mesh generation, assembly, solves and detection.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("electrode under-resolved: electrode {electrode} has {edges} boundary edge(s), at least 2 required")]
    ElectrodeUnderResolved { electrode: usize, edges: usize },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("contrast condition violated: eps_D*sigma_bg - eps_bg*sigma_D = 0")]
    ContrastViolated,

    #[error("drive currents do not sum to zero (sum magnitude {sum:e}, max |I| {max:e})")]
    NonZeroSumCurrent { sum: f64, max: f64 },

    #[error("factorization breakdown at row {row} of {size}: pivot magnitude {pivot:e}")]
    FactorizationBreakdown { row: usize, size: usize, pivot: f64 },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("no admissible balls: every grid center violates the domain margin")]
    NoAdmissibleBalls,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("index out of bounds: {0}")]
    OutOfBounds(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
