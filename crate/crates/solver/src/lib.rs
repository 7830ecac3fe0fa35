//! Linear and mixed-binary linear programming.
//!
//! Problems are assembled with [`LinearProgram`] and handed to a
//! [`SolverBackend`]. The crate ships one backend, [`BuiltinBackend`], a
//! bounded revised simplex with sparse LU factorization, wrapped in a
//! best-bound branch and bound when binaries are present.

mod backend;
mod branch;
mod error;
mod lu;
mod options;
mod outcome;
mod problem;
mod simplex;

pub use backend::{available_backends, backend_by_name, BuiltinBackend, SolverBackend};
pub use error::SolverError;
pub use options::SolverOptions;
pub use outcome::{SolveOutcome, SolveStats, Status};
pub use problem::{Constraint, LinearProgram, Sense, VarId, VarKind, Variable};
