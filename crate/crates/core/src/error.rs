use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants map onto CLI exit codes through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Cartan type: {0}")]
    CartanType(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("class is not big (all coefficients must be positive): {0}")]
    NotBig(String),
    #[error("unsupported base field: {0}")]
    UnsupportedField(String),
    #[error("singular matrix")]
    Singular,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("singular value iteration did not converge after {0} sweeps")]
    SvdNoConvergence(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("entry bound {given} is below the completeness bound {required}")]
    IncompleteBound { given: u64, required: u64 },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("parameter outside the convergence region: {0}")]
    Divergent(String),
    #[error("cutoff {cutoff} too small: tail bound {tail:e} exceeds requested {requested:e}")]
    CutoffTooSmall { cutoff: u32, tail: f64, requested: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("extrapolation did not converge: raw values {0:?}")]
    Extrapolation([f64; 3]),
    #[error("unsupported group for this operation: {0}")]
    UnsupportedGroup(String),
    #[error("estimated work {estimate:.3e} exceeds budget {budget:.3e}")]
    Budget { estimate: f64, budget: f64 },
    #[error("input mismatch: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the CLI: 3 for budget refusals, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
