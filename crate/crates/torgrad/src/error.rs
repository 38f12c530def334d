use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse word `{0}`")]
    Parse(String),
    #[error("generator index {index} out of range for {generators} generators")]
    Generator { index: usize, generators: usize },
    #[error("quotient order exceeds the cap of {cap}")]
    OrderCap { cap: usize },
    #[error("relator `{relator}` does not map to the identity")]
    RelatorViolation { relator: String },
    #[error("objects live on different levels")]
    LevelMismatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("containment violation: {0}")]
    Containment(String),
    #[error("{atoms} atoms exceed the exhaustive cap {cap}")]
    CapExceeded { atoms: usize, cap: usize },
    #[error("cover failure, uncovered measure {0}")]
    CoverFailure(BigRational),
    #[error("not a strict chain map or complex: {0}")]
    NotStrict(String),
    #[error("malformed witness: {0}")]
    Witness(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("not a chain complex: {0}")]
    NotComplex(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
