use std::fmt;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NodeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::TimeLimit => "time_limit",
            Status::NodeLimit => "node_limit",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Simplex pivots, summed over all LPs solved.
    pub iterations: u64,
    /// Branch-and-bound nodes whose relaxation was solved (1 for a pure LP).
    pub nodes: u64,
    pub wall_time: Duration,
    /// Objective of each new incumbent, in the order they were found.
    pub incumbents: Vec<f64>,
    /// Best proven lower bound at termination.
    pub best_bound: Option<f64>,
}

/// Result of one backend call.
///
/// `values` and `objective` are present for `Optimal` and for limit
/// statuses that carry an incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Row duals of the final LP (pure LP solves only).
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub fn without_solution(status: Status, stats: SolveStats) -> Self {
        Self {
            status,
            values: None,
            objective: None,
            duals: None,
            stats,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn has_solution(&self) -> bool {
        self.values.is_some()
    }
}
