use crate::branch;
use crate::error::SolverError;
use crate::options::SolverOptions;
use crate::outcome::SolveOutcome;
use crate::problem::LinearProgram;

/// Anything that can solve a [`LinearProgram`], with or without binaries.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProgram, opts: &SolverOptions) -> Result<SolveOutcome, SolverError>;
}

/// Revised simplex with best-bound branch and bound for binaries.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinBackend;

impl BuiltinBackend {
    pub const NAME: &'static str = "builtin";
}

impl SolverBackend for BuiltinBackend {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn solve(&self, lp: &LinearProgram, opts: &SolverOptions) -> Result<SolveOutcome, SolverError> {
        branch::solve(lp, opts)
    }
}

/// Looks up a backend by name.
pub fn backend_by_name(name: &str) -> Result<Box<dyn SolverBackend>, SolverError> {
    match name {
        BuiltinBackend::NAME => Ok(Box::new(BuiltinBackend)),
        other => Err(SolverError::BackendUnavailable(other.to_string())),
    }
}

pub fn available_backends() -> &'static [&'static str] {
    &[BuiltinBackend::NAME]
}
