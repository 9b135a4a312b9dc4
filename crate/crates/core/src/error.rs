use thiserror::Error;

/// Errors raised by the numerical kernels, the solver and the diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown initial-data generator `{0}`")]
    UnknownGenerator(String),

    #[error("CFL violation: dt/h = {ratio:.4} exceeds the CFL factor {limit:.4}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("non-finite value at node {node} (r = {r}) at t = {t}; the amplitude ceiling is too large")]
    NonFinite { node: usize, r: f64, t: f64 },

    #[error("no blow-up recorded anywhere on the grid")]
    NoBlowup,

    #[error("no estimate: {0}")]
    NoEstimate(String),

    #[error("outside recorded data: {0}")]
    OutOfRange(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
