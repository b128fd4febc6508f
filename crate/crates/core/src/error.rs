use thiserror::Error;

#[derive(Debug, Error)]
pub enum JmfError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("negative entry {value} in {what} at ({row}, {col})")]
    Negative {
        what: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown view index {0}")]
    UnknownView(usize),

    #[error("objective became non-finite at outer iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("labels must contain both classes")]
    DegenerateLabels,
}

pub type Result<T> = std::result::Result<T, JmfError>;
