use thiserror::Error;

use crate::problem::VarId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("row {row} references undeclared variable {var}")]
    DanglingVariable { row: usize, var: VarId },
    #[error("variable {name} ({var}) has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        var: VarId,
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid solver option: {0}")]
    InvalidOptions(String),
    #[error("solver backend '{0}' is not available")]
    BackendUnavailable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
