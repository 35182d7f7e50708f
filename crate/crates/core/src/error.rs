use thiserror::Error;

/// Errors surfaced by the kernels, operators and solver drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0} did not converge within the iteration cap")]
    NonConvergence(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    /// The projected S-step pencil was singular. The spectra of the projected
    /// coefficients may intersect even when the full problem is uniquely
    /// solvable, so drivers treat this as recoverable and retry with fresh
    /// bases.
    #[error("singular projected pencil in S-step")]
    SingularProjectedPencil,

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
