use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate element {element} on curve {curve}: chord length {length:e}")]
    DegenerateElement {
        curve: usize,
        element: usize,
        length: f64,
    },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgDidNotConverge { iterations: usize, residual: f64 },

    #[error("nonpositive diagonal entry {value:e} at row {row}")]
    NonpositiveDiagonal { row: usize, value: f64 },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid triod: {0}")]
    InvalidTriod(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Re-labels a `DegenerateElement` raised by a per-curve routine with the
    /// curve's index inside the triod.
    pub(crate) fn on_curve(self, index: usize) -> Self {
        match self {
            Error::DegenerateElement {
                element, length, ..
            } => Error::DegenerateElement {
                curve: index,
                element,
                length,
            },
            other => other,
        }
    }
}
