use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite coordinate in row {row}")]
    NonFinite { row: usize },

    #[error("point {index} lies {distance} from the network (snap_max = {max})")]
    OffNetwork { index: usize, distance: f64, max: f64 },

    #[error("invalid segment index {0}")]
    InvalidSegment(usize),

    #[error("negative lag: {0}")]
    NegativeLag(f64),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unresolved variable `{0}`")]
    UnresolvedVariable(String),

    #[error("design matrix is rank deficient; aliased columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("IRLS diverged: {0}")]
    Divergence(String),

    #[error("IRLS did not converge in {0} iterations")]
    MaxIterations(usize),

    #[error("optimizer stagnated: {0}")]
    Stagnation(String),

    #[error("covariance matrix not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("subcriticality violated: {0}")]
    Subcriticality(String),

    #[error("id {id} out of range (n = {n})")]
    IdOutOfRange { id: usize, n: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
