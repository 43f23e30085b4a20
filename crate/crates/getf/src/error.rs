use thiserror::Error;

/// Errors raised by tensor construction and the decomposition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("bounds error: coordinate {tuple:?} outside shape {shape:?}")]
    Bounds { tuple: Vec<usize>, shape: Vec<usize> },

    #[error("mode error: {0}")]
    Mode(String),

    #[error("permutation error: {0}")]
    Permutation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("operation undefined on an all-zero tensor")]
    EmptyTensor,

    #[error("no candidate region holds at least {lambda} entries")]
    NoRegion { lambda: usize },

    #[error("tensor is not 2-LTL in the required orientation")]
    NotTwoLtl,

    #[error("degenerate fiber: anchored pattern fiber is all-zero")]
    DegenerateFiber,

    #[error("search budget exceeded: {0}")]
    Budget(String),

    #[error("invalid synthesis spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
