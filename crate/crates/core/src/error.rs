use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the model domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Operation called in a regime where it is undefined.
    #[error("regime error: {0}")]
    Regime(String),
    /// Solver or estimator failure.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) | Error::Regime(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
