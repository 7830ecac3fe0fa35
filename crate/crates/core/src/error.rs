use carveopt_solver::{SolverError, Status};
use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instance is invalid ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidInstance(Vec<Violation>),
    #[error("unknown material '{0}'")]
    UnknownMaterial(String),
    #[error("unknown recipe '{0}'")]
    UnknownRecipe(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constraint group {0} was already added")]
    DuplicateGroup(String),
    #[error("reference solve for f{component} ended with status {status}")]
    ReferenceFailed { component: usize, status: Status },
    #[error("calibration run ended with status {0}")]
    CalibrationFailed(Status),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
