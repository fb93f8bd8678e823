use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("unknown builtin loss `{0}`")]
    UnknownBuiltin(String),

    #[error(
        "inner loop of round {round} exceeded the safety cap of {cap} steps \
         (last stationarity measure {last_measure:e}, threshold {threshold:e})"
    )]
    SafetyCapExceeded {
        round: usize,
        cap: u64,
        last_measure: f64,
        threshold: f64,
    },

    #[error("player {player} aborted: {source}")]
    PlayerAbort {
        player: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed summary {path}: {reason}")]
    MalformedSummary { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
