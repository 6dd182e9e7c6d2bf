use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-invertible matrix")]
    NonInvertible,

    #[error("letter {letter} out of range for alphabet of size {alphabet}")]
    LetterOutOfRange { letter: usize, alphabet: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("support mismatch: reference weight vanishes on a word of positive mass")]
    SupportMismatch,

    #[error(
        "enumeration budget exceeded: {alphabet}^{depth} words > {budget}; try depth <= {suggested_depth}"
    )]
    BudgetExceeded {
        alphabet: usize,
        depth: usize,
        budget: u64,
        suggested_depth: usize,
    },

    #[error("s_q is undefined at q = 1, use tau(1) = 0")]
    UndefinedAtOne,

    #[error("no sign change of the pressure for q = {q} below s = {s_max}")]
    NoSignChange { q: f64, s_max: f64 },

    #[error("s = {s} lies on a regime boundary; derivative formula not available")]
    Boundary { s: f64 },

    #[error("finite-difference stencil straddles q = 1")]
    StraddlesOne,

    #[error("Lyapunov exponents must satisfy lambda2 <= lambda1 < 0 (got {lambda1}, {lambda2})")]
    NonContractive { lambda1: f64, lambda2: f64 },

    #[error("multicone is not strongly invariant")]
    NonInvariantCone,

    #[error("degenerate point set")]
    DegeneratePoints,

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
}
