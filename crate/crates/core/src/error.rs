use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants map onto CLI exit codes: [`Error::Usage`] is a caller bug or a
/// malformed request (exit 2), while the numeric variants describe a metric
/// that cannot be evaluated at the requested point (exit 3).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("degenerate metric: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attach the sample location to the message so grid failures can be traced.
    pub fn at_point(self, r: f64, s: f64) -> Self {
        let tag = |m: String| {
            if m.contains(" at (r, s) = ") {
                m
            } else {
                format!("{m} at (r, s) = ({r}, {s})")
            }
        };
        match self {
            Error::Usage(m) => Error::Usage(tag(m)),
            Error::Domain(m) => Error::Domain(tag(m)),
            Error::Singularity(m) => Error::Singularity(tag(m)),
            Error::Degenerate(m) => Error::Degenerate(tag(m)),
            Error::Precondition(m) => Error::Precondition(tag(m)),
        }
    }

    /// True for errors caused by the metric itself rather than by the caller.
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Error::Usage(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
