use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// An oracle returned something its contract forbids, or the solver ran
    /// past an iteration bound that only a broken oracle can exceed.
    #[error("oracle contract violated: {0}")]
    OracleContract(String),

    /// A hard cap (oracle calls, instance size, enumeration size) was hit.
    #[error("{what} cap exceeded: {value} > {cap}")]
    CapExceeded { what: &'static str, value: u64, cap: u64 },

    /// A caller-supplied bound turned out to be invalid, e.g. `q < OPT`.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::OracleContract(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
