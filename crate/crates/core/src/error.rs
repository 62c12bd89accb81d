use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid rate exponent {gamma}: must lie strictly inside (0.25, 0.5)")]
    InvalidRate { gamma: f64 },

    #[error("unsupported feature law {0}: learner requires standard normal features")]
    UnsupportedLaw(String),

    #[error("invalid folds: K = {k} with n = {n} (need 2 <= K <= n)")]
    InvalidFolds { n: usize, k: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("out-of-bag error undefined: every sample is in-bag for every tree")]
    UndefinedOob,

    #[error("insufficient data: need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("log-domain error: {0}")]
    LogDomain(String),

    #[error("replication {replication}, n = {n}, learner `{learner}`: {source}")]
    Replication {
        replication: usize,
        n: usize,
        learner: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by a failure
    /// during a computation.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::InvalidRate { .. }
            | Error::UnsupportedLaw(_)
            | Error::InvalidFolds { .. }
            | Error::InvalidConfig(_)
            | Error::Csv(_) => true,
            _ => false,
        }
    }
}
