use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown user id {id:?} at line {line}")]
    UnknownUser { id: String, line: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pagerank did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("feature definition error: {0}")]
    Definition(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("column alignment error: {0}")]
    Alignment(String),

    #[error("stage {stage} requires artifact {artifact}; run that stage first")]
    MissingDependency { stage: String, artifact: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
