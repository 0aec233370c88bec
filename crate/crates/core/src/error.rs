use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The gradient vanishes, so a direction-based score is undefined.
    #[error("gradient vanishes at the evaluation point")]
    ZeroGradient,

    /// No sample lies inside the neighborhood used by a local method.
    #[error("no sample within the neighborhood of the evaluation point")]
    IsolatedPoint,

    #[error("projection onto the reference manifold is undefined at the origin")]
    DegenerateProjection,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
