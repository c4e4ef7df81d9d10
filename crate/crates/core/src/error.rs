use thiserror::Error;

/// Errors raised across flux evaluation, synthesis and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown flux `{0}`")]
    UnknownFlux(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("norm is unbounded on {0}")]
    UnboundedNorm(String),

    #[error("zero shift in difference quotient (use the derivative instead)")]
    ZeroShift,

    #[error("not controllable: {0}")]
    NotControllable(String),

    #[error("argsup branch undetermined: {0}")]
    BranchUndetermined(String),

    #[error("infeasible: {0}")]
    Feasibility(String),

    #[error("extension infeasible: {0}")]
    ExtensionInfeasible(String),

    #[error("one-sided Lipschitz condition violated: {0}")]
    OneSidedViolation(String),

    #[error("growth hypothesis H2 violated: {0}")]
    H2Violation(String),

    #[error("gradient blow-up at t = {t} on the characteristic from x0 = {x0}")]
    BlowUp { t: f64, x0: f64 },

    #[error("computational window too small: {0}")]
    WindowTooSmall(String),

    #[error("time step failure: {0}")]
    StepFailure(String),

    #[error("certificate violated: {0}")]
    CertificateViolation(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
