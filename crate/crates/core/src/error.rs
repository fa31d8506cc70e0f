use pep_sdp::{SdpError, Status};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PepError {
    #[error("unregistered label: {0}")]
    UnregisteredLabel(String),
    #[error("problem has no objective")]
    MissingObjective,
    #[error("problem has no constraints")]
    NoConstraints,
    #[error("LMI `{0}` is not square")]
    NonSquareLmi(String),
    #[error("LMI `{0}` is not symmetric")]
    AsymmetricLmi(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("family `{found}` cannot be used here; expected {expected}")]
    WrongFamily { expected: String, found: String },
    #[error("{points} points exceed the cycle enumeration cap of {cap}")]
    TooManyPoints { points: usize, cap: usize },
    #[error("empty data handle: {0}")]
    EmptyHandle(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-affine update: {0}")]
    NonAffine(String),
    #[error("undeclared oracle `{0}`")]
    UndeclaredOracle(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("solver: {0}")]
    Solver(#[from] SdpError),
    #[error("solver finished with status {0}")]
    NotOptimal(Status),
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
