use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero divisor at index {0}")]
    ZeroDivisor(usize),

    #[error("negative operand {value} under square root at index {index}")]
    NegativeSqrt { index: usize, value: f64 },

    #[error("ill-conditioned system: pivot {pivot:e} at row {row}")]
    IllConditioned { row: usize, pivot: f64 },

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid theta {0}: must lie in [0, 1]")]
    InvalidTheta(f64),

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("degenerate step: coordinate {0} annihilated")]
    DegenerateStep(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no sign change in bracket [{lo}, {hi}]")]
    BracketError { lo: f64, hi: f64 },

    #[error("claim violated: {0}")]
    ClaimViolated(String),

    #[error("iterate left the interior at iteration {iter}")]
    NonInterior { iter: usize },

    #[error("iterate dropped below the normal floating-point range at iteration {iter}")]
    Underflow { iter: usize },

    #[error("iteration limit {0} reached")]
    MaxIters(usize),

    #[error("no start reached {target} recorded iterates (best {best})")]
    CaptureFailed { target: usize, best: usize },

    #[error("no interior point found: {0}")]
    NoInteriorFound(String),

    #[error("predicate never holds in [{lo}, {hi}]")]
    NotFound { lo: f64, hi: f64 },

    #[error("invalid linear program: {0}")]
    InvalidProgram(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
