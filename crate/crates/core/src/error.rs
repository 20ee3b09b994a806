use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("backend window violation: {0}")]
    BackendWindow(String),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("no acceptable sample after {0} attempts")]
    AttemptsExhausted(u64),
}

impl Error {
    /// True for failures caused by the caller's parameters rather than
    /// by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Argument(_) | Error::Shape(_))
    }
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
