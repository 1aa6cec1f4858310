use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("column {0:?} missing from input")]
    MissingColumn(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("class {class:?} has {got} rows, need {need} for a balanced train split")]
    InsufficientClassSamples {
        class: String,
        got: usize,
        need: usize,
    },

    #[error("n_train {n_train} leaves no remainder for oracle/test out of {n_rows} rows")]
    NTooLarge { n_train: usize, n_rows: usize },

    #[error("train partition is empty")]
    EmptyTrain,

    #[error("train data contains a single class; need at least two")]
    SingleClassTrain,

    #[error("label {0:?} is not a declared target level")]
    UnknownLabel(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("synthetic dataset is empty")]
    EmptySynthetic,

    #[error("class {class:?} has {got} rows, need at least {need}")]
    ClassTooSmall {
        class: String,
        got: usize,
        need: usize,
    },

    #[error("no numeric features to operate on")]
    NoNumericFeatures,

    #[error("labels contain a single class; metric undefined")]
    OneClassOnly,

    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },

    #[error("regression input is degenerate: all x values equal")]
    DegenerateX,

    #[error("predicate selects no rows")]
    EmptySlice,

    #[error("empty cell in equalized-odds table: {0}")]
    EmptyCell(String),

    #[error("authentication rejected by provider (check the API key)")]
    AuthError,

    #[error("provider rate limit persisted after retries")]
    RateLimited,

    #[error("generation budget exhausted: accepted {got} of {wanted} requested rows")]
    BudgetExhausted { got: usize, wanted: usize },

    #[error("transport error: {0}")]
    TransportError(String),

    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),

    #[error("{0}")]
    InvalidConfig(String),
}
