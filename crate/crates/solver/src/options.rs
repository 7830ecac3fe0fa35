use std::time::Duration;

use crate::error::SolverError;

/// Tolerances and limits shared by the LP and MILP paths.
///
/// Every tolerance is applied in absolute-plus-relative form,
/// `tol * max(1, |value|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility of rows and bounds.
    pub feasibility_tolerance: f64,
    /// Distance from {0, 1} below which a binary counts as integral.
    pub integrality_tolerance: f64,
    /// Reduced-cost tolerance, and absolute MILP gap.
    pub optimality_tolerance: f64,
    /// Relative MILP gap between incumbent and best bound.
    pub relative_gap: f64,
    pub time_limit: Duration,
    pub node_limit: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-7,
            integrality_tolerance: 1e-6,
            optimality_tolerance: 1e-7,
            relative_gap: 1e-6,
            time_limit: Duration::from_secs(60),
            node_limit: None,
        }
    }
}

impl SolverOptions {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let named = [
            ("feasibility_tolerance", self.feasibility_tolerance),
            ("integrality_tolerance", self.integrality_tolerance),
            ("optimality_tolerance", self.optimality_tolerance),
            ("relative_gap", self.relative_gap),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(SolverError::InvalidOptions(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.integrality_tolerance >= 0.5 {
            return Err(SolverError::InvalidOptions(
                "integrality_tolerance must be below 0.5".into(),
            ));
        }
        Ok(())
    }
}
