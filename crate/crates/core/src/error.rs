use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid permuton: {0}")]
    InvalidPermuton(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size cap exceeded: {what} = {value} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("infeasible constraints: best residual {residual:.3e} after {starts} starts")]
    Infeasible { residual: f64, starts: usize },

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
