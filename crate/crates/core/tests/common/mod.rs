#![allow(dead_code)]

use carveopt_core::solver::{BuiltinBackend, LinearProgram, SolverBackend, SolverOptions, Status, VarKind};

/// Optimum over every assignment of the binaries, each assignment solved as
/// an LP; `None` when no assignment is feasible.
pub fn enumerate_binaries(lp: &LinearProgram) -> Option<f64> {
    let binaries: Vec<_> = lp.binaries().collect();
    assert!(binaries.len() <= 16, "too many binaries to enumerate");
    let mut best: Option<f64> = None;
    for mask in 0u32..1 << binaries.len() {
        let mut fixed = lp.relaxed();
        for (bit, &v) in binaries.iter().enumerate() {
            let value = f64::from((mask >> bit) & 1);
            fixed.set_bounds(v, value, value);
        }
        let out = BuiltinBackend.solve(&fixed, &SolverOptions::default()).unwrap();
        if out.status == Status::Optimal {
            let obj = out.objective.unwrap();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

pub fn num_binaries(lp: &LinearProgram) -> usize {
    lp.variables().iter().filter(|v| v.kind == VarKind::Binary).count()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

use carveopt_core::synth::random_small_instance;
use carveopt_core::{all_group_keys, build_global_model, solve, Method, Scenario, SolveReport};
use rand::Rng;

/// Random suite scenario with a gap tight enough that two exact methods
/// agree far inside 1e-6.
pub fn suite_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let mut s = Scenario::new(random_small_instance(rng)).unwrap();
    s.solver_options.relative_gap = 1e-10;
    s
}

pub struct OracleCase {
    pub iterative: SolveReport,
    pub global: SolveReport,
    /// Enumeration optimum, when the global model has at most 12 binaries.
    pub enumerated: Option<Option<f64>>,
    pub iteration_bound: usize,
}

pub fn oracle_case(s: &Scenario) -> OracleCase {
    let iterative = solve(s, Method::Iterative).unwrap();
    let global = solve(s, Method::Global).unwrap();
    let model = build_global_model(s).unwrap();
    let enumerated = (num_binaries(&model.lp) <= 12).then(|| enumerate_binaries(&model.lp));
    OracleCase {
        iterative,
        global,
        enumerated,
        iteration_bound: 1 + all_group_keys(s).len(),
    }
}

/// Per-iteration objectives never decrease.
pub fn monotone(report: &SolveReport) -> bool {
    let objs: Vec<f64> = report.per_iteration.iter().filter_map(|r| r.objective).collect();
    objs.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0))
}
