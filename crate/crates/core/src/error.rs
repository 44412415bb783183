use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the stage that raises them; the CLI maps the
/// groups onto exit codes through [`Error::kind`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),
    #[error("quadrature did not converge: error estimate {err:e} above target {target:e} after {panels} panels")]
    NoConvergence { err: f64, target: f64, panels: usize },

    #[error("no sign change found for {what} on [{lo}, {hi}]")]
    BracketFailure { what: &'static str, lo: f64, hi: f64 },
    #[error("parameter regime error: {0}")]
    Regime(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("point {0} lies outside the domain (-1, 1)")]
    OutOfDomain(f64),
    #[error("grid or extension mismatch: {0}")]
    GridMismatch(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("Newton iteration stalled at level {level}: scaled residual {residual:e} after {iterations} iterations")]
    NewtonStall { level: usize, residual: f64, iterations: usize },
    #[error("monotone iteration violated at level {level}: node {node} decreased by {amount:e}")]
    MonotoneViolation { level: usize, node: usize, amount: f64 },
    #[error("no admissible sub/super pair: {0}")]
    NoAdmissiblePair(String),

    #[error("too few sample points: need {needed}, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("audit failed: {0}")]
    AuditFail(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Regime,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BadConfig(_) | Error::OutOfDomain(_) | Error::GridMismatch(_) | Error::Io(_) => {
                ErrorKind::Config
            }
            Error::Regime(_) => ErrorKind::Regime,
            _ => ErrorKind::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
