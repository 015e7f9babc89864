use thiserror::Error;

/// Errors produced by the fiberlab library.
///
/// Variants fall into two groups: rejected inputs, and
/// [`Error::InvariantViolation`], which is raised when a quantity that is
/// guaranteed by a theorem fails to hold and therefore indicates a bug.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("zero is not a valid input")]
    ZeroInput,
    #[error("set contains the element 0")]
    ZeroElement,
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("could not factor {0} within the configured bound")]
    FactorizationTooHard(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dilation produces the non-integer {0}")]
    NonIntegerResult(String),
    #[error("left vertex {vertex} has degree {degree} > k = {k}")]
    DegreeTooHigh { vertex: usize, degree: usize, k: u32 },
    #[error("elements with more than {k} distinct prime factors: {elements:?}")]
    OmegaTooLarge { k: u32, elements: Vec<String> },
    #[error("decomposition has no fibres")]
    EmptyDecomposition,
    #[error("no fibre satisfies the witness inequality")]
    NoWitness,
    #[error("inconsistent iteration state: {0}")]
    InconsistentState(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("collision detected: expected {expected} elements, got {got}")]
    CollisionDetected { expected: usize, got: usize },
    #[error("parameter space holds only {available} values, {requested} requested")]
    PoolExhausted { requested: usize, available: String },
    #[error("bad exponent q = {0}")]
    BadExponent(String),
    #[error("sign pattern has no entry for class {0}")]
    MissingKey(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("set is empty after sanitizing")]
    EmptyAfterSanitize,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// True when the error signals an implementation bug rather than bad input.
    pub fn is_bug(&self) -> bool {
        matches!(self, Error::InvariantViolation(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
