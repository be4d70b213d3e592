use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    /// `backward` was requested on a layer that holds no forward cache.
    #[error("backward before forward: {0}")]
    State(String),

    #[error("optimizer diverged: non-finite gradient in parameter block {block} ({name})")]
    Divergence { block: usize, name: String },

    #[error("training failed at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Table {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent data: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no feature columns left: {0}")]
    EmptyFeatures(String),

    #[error("all {iterations} augmentation iterations failed; last error: {last}")]
    AllIterationsFailed { iterations: usize, last: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
