use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A numeric input lies outside the region where the quantity is defined
    /// (unstable queue, Lambert W below the branch point, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Two independent numerical routes disagreed.
    #[error("numerical cross-check failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
