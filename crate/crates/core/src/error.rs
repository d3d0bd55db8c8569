use thiserror::Error;

/// Errors raised by the numerical operations and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("inconsistent linear system (residual {residual:.3e})")]
    Inconsistent { residual: f64 },

    #[error("degenerate form at point: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
