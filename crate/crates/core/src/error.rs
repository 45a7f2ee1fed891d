use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolver did not converge (off-diagonal residual {residual:.3e})")]
    NumericalFailure { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate cut: min(d_A, d_B) = 1")]
    DegenerateCut,

    #[error(
        "integration failed after {steps} steps (trace drift {trace_drift:.3e}, \
         min eigenvalue {min_eigenvalue:.3e}); retry with {suggested_steps} steps"
    )]
    Integration {
        steps: usize,
        trace_drift: f64,
        min_eigenvalue: f64,
        suggested_steps: usize,
    },

    #[error("invalid (X, Y) pair: {0}")]
    InvalidPair(String),

    #[error("sampler gave up after {attempts} attempts: {reason}")]
    SamplerFailure { attempts: usize, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid sweep configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
