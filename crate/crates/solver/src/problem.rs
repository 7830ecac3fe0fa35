//! Linear program representation shared by every backend.

use std::fmt;

use crate::error::SolverError;

/// Index of a variable inside a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    /// Restricted to {0, 1} by branch-and-bound; relaxed to [0, 1] by the LP.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A minimization problem over bounded variables and sparse linear rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    variables: Vec<Variable>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_variable(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Adds a row; repeated variables in `terms` are merged and zero
    /// coefficients dropped. Returns the row index.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] = coefficient;
    }

    pub fn add_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] += coefficient;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    pub fn has_binaries(&self) -> bool {
        self.variables.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Copy with every binary mark turned into a continuous [0, 1] variable.
    pub fn relaxed(&self) -> LinearProgram {
        let mut lp = self.clone();
        for v in &mut lp.variables {
            v.kind = VarKind::Continuous;
        }
        lp
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Checks structural well-formedness: references, bounds and finiteness.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.variables.len();
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(SolverError::InvalidBounds {
                    var: VarId(i),
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(SolverError::InvalidBounds {
                    var: VarId(i),
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if !self.objective[i].is_finite() {
                return Err(SolverError::NonFinite(format!(
                    "objective coefficient of {}",
                    v.name
                )));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(SolverError::NonFinite(format!("rhs of row {} ({})", r, c.name)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= n {
                    return Err(SolverError::DanglingVariable { row: r, var: v });
                }
                if !a.is_finite() {
                    return Err(SolverError::NonFinite(format!(
                        "coefficient of {} in row {}",
                        v, c.name
                    )));
                }
            }
        }
        Ok(())
    }
}
