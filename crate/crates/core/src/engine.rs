//! Iterative constraint generation and the one-shot global model.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use carveopt_solver::{BuiltinBackend, SolveOutcome, SolverBackend, Status};

use crate::builder::{build_base_lp, extract_solution, AltKey, PpopModel, Solution};
use crate::encoding::{build_global_model, GroupKey};
use crate::error::ModelError;
use crate::model::Scenario;

/// Relative tolerance on MOQ thresholds.
pub const MOQ_TOLERANCE: f64 = 1e-6;
/// Tolerance on the share of an alternative member.
pub const MPA_RATIO_TOLERANCE: f64 = 1e-6;
/// Recipe levels at or below this (times `max(1, throughput)`) count as 0.
pub const LEVEL_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Iterative,
    Global,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Iterative => "iterative",
            Method::Global => "global",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationSet {
    pub moq: Vec<usize>,
    pub mpa: Vec<AltKey>,
}

impl ViolationSet {
    pub fn is_empty(&self) -> bool {
        self.moq.is_empty() && self.mpa.is_empty()
    }

    pub fn len(&self) -> usize {
        self.moq.len() + self.mpa.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = GroupKey> + '_ {
        self.moq
            .iter()
            .map(|&i| GroupKey::Moq(i))
            .chain(self.mpa.iter().map(|&k| GroupKey::Mpa(k)))
    }
}

fn moq_violated(buy: f64, moq: f64) -> bool {
    let tol = MOQ_TOLERANCE * moq.max(1.0);
    moq > 0.0 && buy > tol && buy < moq - tol
}

fn mpa_violated(z_hat: f64, z: f64, throughput: f64, ratio: f64) -> bool {
    if z <= LEVEL_EPSILON * throughput.max(1.0) {
        return false;
    }
    let share = z_hat / z;
    share > MPA_RATIO_TOLERANCE && share < ratio - MPA_RATIO_TOLERANCE
}

/// Disjunctions the solution breaks, skipping groups in `existing`.
pub fn check_violations(scenario: &Scenario, solution: &Solution, existing: &BTreeSet<GroupKey>) -> ViolationSet {
    let inst = &scenario.instance;
    let mut out = ViolationSet::default();
    for i in 0..inst.num_materials() {
        if !existing.contains(&GroupKey::Moq(i)) && moq_violated(solution.buy[i], scenario.moq(i)) {
            out.moq.push(i);
        }
    }
    for (&key, &zh) in &solution.z_hat {
        if existing.contains(&GroupKey::Mpa(key)) {
            continue;
        }
        let throughput = inst.recipe(key.recipe).throughput();
        if mpa_violated(zh, solution.z[key.recipe], throughput, scenario.mpa_ratio) {
            out.mpa.push(key);
        }
    }
    out
}

/// True when every MOQ and MPA disjunction holds within tolerance.
pub fn satisfies_disjunctions(scenario: &Scenario, solution: &Solution) -> bool {
    check_violations(scenario, solution, &BTreeSet::new()).is_empty()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub status: Status,
    pub objective: Option<f64>,
    pub wall_time: Duration,
    /// Groups added after this iteration.
    pub added_moq: usize,
    pub added_mpa: usize,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub status: Status,
    pub iterations: usize,
    /// Number of MOQ groups in the final model.
    pub added_moq: usize,
    /// Number of MPA groups in the final model.
    pub added_mpa: usize,
    pub per_iteration: Vec<IterationRecord>,
    pub solution: Option<Solution>,
    /// Whether `solution` satisfies every disjunction. Always true for
    /// optimal reports.
    pub feasible_for_full: bool,
    pub wall_time: Duration,
    pub exponent_scale: f64,
}

impl SolveReport {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective_value)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

pub fn solve(scenario: &Scenario, method: Method) -> Result<SolveReport, ModelError> {
    solve_with(scenario, method, &BuiltinBackend)
}

pub fn solve_with(scenario: &Scenario, method: Method, backend: &dyn SolverBackend) -> Result<SolveReport, ModelError> {
    match method {
        Method::Iterative => solve_iterative_with(scenario, backend),
        Method::Global => solve_global_with(scenario, backend),
    }
}

pub fn solve_iterative(scenario: &Scenario) -> Result<SolveReport, ModelError> {
    solve_iterative_with(scenario, &BuiltinBackend)
}

pub fn solve_global(scenario: &Scenario) -> Result<SolveReport, ModelError> {
    solve_global_with(scenario, &BuiltinBackend)
}

struct Run<'a> {
    scenario: &'a Scenario,
    start: Instant,
    records: Vec<IterationRecord>,
}

impl Run<'_> {
    fn solve_once(&mut self, backend: &dyn SolverBackend, model: &PpopModel) -> Result<SolveOutcome, ModelError> {
        let budget = self.scenario.solver_options.time_limit;
        let remaining = budget.saturating_sub(self.start.elapsed());
        let opts = self.scenario.solver_options.clone().with_time_limit(remaining);
        let t0 = Instant::now();
        let outcome = backend.solve(&model.lp, &opts)?;
        self.records.push(IterationRecord {
            status: outcome.status,
            objective: outcome.objective,
            wall_time: t0.elapsed(),
            added_moq: 0,
            added_mpa: 0,
            nodes: outcome.stats.nodes,
        });
        Ok(outcome)
    }

    fn report(self, method: Method, status: Status, model: &PpopModel, solution: Option<Solution>) -> SolveReport {
        let feasible_for_full = solution
            .as_ref()
            .is_some_and(|s| satisfies_disjunctions(self.scenario, s));
        let (added_moq, added_mpa) = count_groups(model);
        SolveReport {
            method,
            status,
            iterations: self.records.len(),
            added_moq,
            added_mpa,
            per_iteration: self.records,
            solution,
            feasible_for_full,
            wall_time: self.start.elapsed(),
            exponent_scale: self.scenario.exponent_scale,
        }
    }
}

fn count_groups(model: &PpopModel) -> (usize, usize) {
    model.groups().fold((0, 0), |(b, p), g| match g.key {
        GroupKey::Moq(_) => (b + 1, p),
        GroupKey::Mpa(_) => (b, p + 1),
    })
}

/// Solve the relaxation, add every violated group, re-solve, until no
/// disjunction is violated.
pub fn solve_iterative_with(scenario: &Scenario, backend: &dyn SolverBackend) -> Result<SolveReport, ModelError> {
    let mut run = Run {
        scenario,
        start: Instant::now(),
        records: Vec::new(),
    };
    let mut model = build_base_lp(scenario)?;
    let mut existing = BTreeSet::new();
    loop {
        let outcome = run.solve_once(backend, &model)?;
        let solution = outcome
            .values
            .as_ref()
            .map(|v| extract_solution(scenario, &model, v));
        match outcome.status {
            Status::Optimal => {}
            status @ (Status::Infeasible | Status::Unbounded) => {
                return Ok(run.report(Method::Iterative, status, &model, None));
            }
            status @ (Status::TimeLimit | Status::NodeLimit) => {
                return Ok(run.report(Method::Iterative, status, &model, solution));
            }
        }
        let solution = solution.expect("optimal outcome carries values");
        let violations = check_violations(scenario, &solution, &existing);
        if violations.is_empty() {
            return Ok(run.report(Method::Iterative, Status::Optimal, &model, Some(solution)));
        }
        if let Some(last) = run.records.last_mut() {
            last.added_moq = violations.moq.len();
            last.added_mpa = violations.mpa.len();
        }
        for key in violations.keys() {
            model.add_group(scenario, key)?;
            existing.insert(key);
        }
    }
}

/// One solve of the model with every group present.
pub fn solve_global_with(scenario: &Scenario, backend: &dyn SolverBackend) -> Result<SolveReport, ModelError> {
    let mut run = Run {
        scenario,
        start: Instant::now(),
        records: Vec::new(),
    };
    let model = build_global_model(scenario)?;
    let outcome = run.solve_once(backend, &model)?;
    let solution = outcome
        .values
        .as_ref()
        .map(|v| extract_solution(scenario, &model, v));
    Ok(run.report(Method::Global, outcome.status, &model, solution))
}
