//! Experiment protocols: weight, pinned-level, MOQ and demand-count sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::time::Duration;

use carveopt_solver::{BuiltinBackend, LinearProgram, Sense, SolverBackend, Status, VarId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Triangular};

use crate::builder::{build_base_lp, extract_solution, AltKey, Components};
use crate::engine::{solve, solve_global, Method, SolveReport};
use crate::error::ModelError;
use crate::model::{Scenario, Weights};

/// References at or below this are treated as zero and get no `t` value.
pub const REFERENCE_EPSILON: f64 = 1e-9;
/// Forced recipe level in the calibration run.
pub const CALIBRATION_LEVEL: f64 = 0.01;
/// Forced share of each alternative member in the calibration run.
pub const CALIBRATION_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Weights,
    Hogs,
    Moq,
    Demand,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Weights => "weights",
            SweepKind::Hogs => "hogs",
            SweepKind::Moq => "moq",
            SweepKind::Demand => "demand",
        }
    }

    fn key_header(self) -> &'static str {
        match self {
            SweepKind::Weights => "weights",
            SweepKind::Hogs => "level",
            SweepKind::Moq => "moq",
            SweepKind::Demand => "demands",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepKey {
    Weights(Weights),
    Level(f64),
    Moq(f64),
    Demands(usize),
}

impl SweepKey {
    pub fn kind(&self) -> SweepKind {
        match self {
            SweepKey::Weights(_) => SweepKind::Weights,
            SweepKey::Level(_) => SweepKind::Hogs,
            SweepKey::Moq(_) => SweepKind::Moq,
            SweepKey::Demands(_) => SweepKind::Demand,
        }
    }
}

impl fmt::Display for SweepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepKey::Weights(w) => write!(f, "{w}"),
            SweepKey::Level(x) | SweepKey::Moq(x) => f.write_str(&significant(*x)),
            SweepKey::Demands(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub key: SweepKey,
    pub status: Status,
    pub objective: Option<f64>,
    pub components: Option<Components>,
    /// Percent deterioration of each component against its reference.
    pub t: [Option<f64>; 5],
    pub iterations: usize,
    pub added_moq: usize,
    pub added_mpa: usize,
    pub wall_time: Duration,
    /// Objective of the complete model, when the comparison was requested.
    pub global_objective: Option<f64>,
}

impl SweepRow {
    fn from_report(key: SweepKey, report: &SolveReport) -> Self {
        let usable = matches!(report.status, Status::Optimal) || report.feasible_for_full;
        let solution = report.solution.as_ref().filter(|_| usable);
        SweepRow {
            key,
            status: report.status,
            objective: solution.map(|s| s.objective_value),
            components: solution.map(|s| s.components),
            t: [None; 5],
            iterations: report.iterations,
            added_moq: report.added_moq,
            added_mpa: report.added_mpa,
            wall_time: report.wall_time,
            global_objective: None,
        }
    }

    fn with_references(mut self, references: &[f64; 5]) -> Self {
        if let Some(c) = self.components {
            for (l, t) in self.t.iter_mut().enumerate() {
                *t = deterioration(c.0[l], references[l]);
            }
        }
        self
    }
}

/// `100 (f / f_ref - 1)`, undefined for a zero reference.
pub fn deterioration(f: f64, reference: f64) -> Option<f64> {
    (reference > REFERENCE_EPSILON).then(|| 100.0 * (f / reference - 1.0))
}

/// Minimum of each component on its own, from five solves with unit
/// weights.
pub fn component_references(base: &Scenario) -> Result<[f64; 5], ModelError> {
    let mut refs = [0.0; 5];
    for (l, r) in refs.iter_mut().enumerate() {
        let report = solve(&base.clone().with_weights(Weights::unit(l)), Method::Iterative)?;
        match (&report.status, &report.solution) {
            (Status::Optimal, Some(sol)) => *r = sol.components.0[l],
            (status, _) => {
                return Err(ModelError::ReferenceFailed {
                    component: l,
                    status: *status,
                })
            }
        }
    }
    Ok(refs)
}

pub fn weight_sweep(base: &Scenario, weight_sets: &[Weights]) -> Result<Vec<SweepRow>, ModelError> {
    if weight_sets.is_empty() {
        return Err(ModelError::InvalidParameter("weight sweep needs at least one weight set".into()));
    }
    let refs = component_references(base)?;
    weight_sets
        .iter()
        .map(|&w| {
            let report = solve(&base.clone().with_weights(w), Method::Iterative)?;
            Ok(SweepRow::from_report(SweepKey::Weights(w), &report).with_references(&refs))
        })
        .collect()
}

/// One row per level with the recipe's activity pinned. The `t` columns
/// compare against the unpinned optimum.
pub fn hog_sweep(base: &Scenario, recipe: &str, levels: &[f64]) -> Result<Vec<SweepRow>, ModelError> {
    if base.instance.recipe_index(recipe).is_none() {
        return Err(ModelError::UnknownRecipe(recipe.to_string()));
    }
    check_ascending(levels, "levels")?;
    let free = solve(base, Method::Iterative)?;
    let refs = match (&free.status, &free.solution) {
        (Status::Optimal, Some(sol)) => Some(sol.components.0),
        _ => None,
    };
    levels
        .iter()
        .map(|&level| {
            let scenario = base.clone().with_fixed_level(recipe, level);
            scenario.validate()?;
            let report = solve(&scenario, Method::Iterative)?;
            let row = SweepRow::from_report(SweepKey::Level(level), &report);
            Ok(match &refs {
                Some(r) => row.with_references(r),
                None => row,
            })
        })
        .collect()
}

/// Uniform MOQ per row, solved iteratively and optionally also with the
/// complete model.
pub fn moq_sweep(base: &Scenario, moq_values: &[f64], compare_global: bool) -> Result<Vec<SweepRow>, ModelError> {
    moq_values
        .iter()
        .map(|&moq| {
            if !(moq >= 0.0 && moq.is_finite()) {
                return Err(ModelError::InvalidParameter(format!("moq must be finite and >= 0, got {moq}")));
            }
            let scenario = base.clone().with_moq(Some(moq));
            let report = solve(&scenario, Method::Iterative)?;
            let mut row = SweepRow::from_report(SweepKey::Moq(moq), &report);
            if compare_global {
                let global = solve_global(&scenario)?;
                row.global_objective = global.is_optimal().then(|| global.objective()).flatten();
            }
            Ok(row)
        })
        .collect()
}

/// Demands derived from forced overproduction.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandCalibration {
    /// Indexed like the instance materials.
    pub values: Vec<f64>,
}

impl DemandCalibration {
    pub fn nonzero(&self) -> usize {
        self.values.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Solves the relaxation with every demand set to zero, every recipe
/// forced to a level of at least 0.01 and every alternative member to at
/// least 5% of its recipe. The new stock of each produced material
/// becomes its calibrated demand.
pub fn calibrate_demands(base: &Scenario) -> Result<DemandCalibration, ModelError> {
    let inst = &base.instance;
    let zeroed = Scenario {
        instance: inst.with_demands(&vec![0.0; inst.num_materials()]).into(),
        fixed_recipe_levels: Default::default(),
        ..base.clone()
    };
    let mut model = build_base_lp(&zeroed)?;
    force_activity(&mut model.lp, &model.vars.z, &model.vars.z_hat);
    let outcome = BuiltinBackend.solve(&model.lp.relaxed(), &zeroed.solver_options)?;
    let Some(values) = outcome.values.filter(|_| outcome.status == Status::Optimal) else {
        return Err(ModelError::CalibrationFailed(outcome.status));
    };
    let solution = extract_solution(&zeroed, &model, &values);
    let produced = produced_materials(&zeroed);
    let values = (0..inst.num_materials())
        .map(|i| if produced[i] { solution.stock_new[i] } else { 0.0 })
        .collect();
    Ok(DemandCalibration { values })
}

fn force_activity(lp: &mut LinearProgram, z: &[VarId], z_hat: &BTreeMap<AltKey, VarId>) {
    for &v in z {
        let name = format!("force_{}", lp.variables()[v.index()].name);
        lp.add_constraint(name, [(v, 1.0)], Sense::Ge, CALIBRATION_LEVEL);
    }
    for (key, &v) in z_hat {
        let name = format!("force_{}", lp.variables()[v.index()].name);
        lp.add_constraint(name, [(v, 1.0), (z[key.recipe], -CALIBRATION_SHARE)], Sense::Ge, 0.0);
    }
}

fn produced_materials(scenario: &Scenario) -> Vec<bool> {
    let inst = &scenario.instance;
    let mut produced = vec![false; inst.num_materials()];
    for r in inst.recipes() {
        for f in &r.outputs {
            if let Some(i) = inst.material_index(&f.material) {
                produced[i] = true;
            }
        }
    }
    produced
}

/// Triangular draw on `[0.1 d, 5 d]` with mode `d`; zero for `d = 0`.
pub fn sample_demand<R: Rng + ?Sized>(d_tilde: f64, rng: &mut R) -> f64 {
    if d_tilde <= 0.0 {
        return 0.0;
    }
    Triangular::new(0.1 * d_tilde, 5.0 * d_tilde, d_tilde)
        .expect("ordered triangular parameters")
        .sample(rng)
}

/// Adds sampled demands one material at a time in a seeded order and
/// solves once per requested count. Only materials with a positive
/// calibrated demand take part.
pub fn demand_scalability(
    base: &Scenario,
    calibration: &DemandCalibration,
    counts: &[usize],
    seed: u64,
) -> Result<Vec<SweepRow>, ModelError> {
    let inst = &base.instance;
    if calibration.values.len() != inst.num_materials() {
        return Err(ModelError::InvalidParameter(format!(
            "calibration has {} values for {} materials",
            calibration.values.len(),
            inst.num_materials()
        )));
    }
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    check_ascending(&as_f64, "counts")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..inst.num_materials())
        .filter(|&i| calibration.values[i] > 0.0)
        .collect();
    order.shuffle(&mut rng);
    if let Some(&max) = counts.last() {
        if max > order.len() {
            return Err(ModelError::InvalidParameter(format!(
                "requested {max} demands but only {} materials have a calibrated demand",
                order.len()
            )));
        }
    }
    let sampled: Vec<f64> = order
        .iter()
        .map(|&i| sample_demand(calibration.values[i], &mut rng))
        .collect();
    counts
        .iter()
        .map(|&count| {
            let mut demands = vec![0.0; inst.num_materials()];
            for (&i, &d) in order.iter().zip(&sampled).take(count) {
                demands[i] = d;
            }
            let scenario = Scenario {
                instance: inst.with_demands(&demands).into(),
                ..base.clone()
            };
            let report = solve(&scenario, Method::Iterative)?;
            Ok(SweepRow::from_report(SweepKey::Demands(count), &report))
        })
        .collect()
}

fn check_ascending(values: &[f64], what: &str) -> Result<(), ModelError> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(ModelError::InvalidParameter(format!("{what} must be finite and >= 0")));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(ModelError::InvalidParameter(format!("{what} must be sorted ascending")));
    }
    Ok(())
}

/// Six significant digits, trailing zeros trimmed.
pub fn significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Adds a wall-clock column; rows are then no longer byte-stable.
    pub timing: bool,
}

/// Writes one sweep as CSV. Columns depend on the kind of the first row.
pub fn write_csv<W: io::Write>(rows: &[SweepRow], out: W, options: CsvOptions) -> Result<(), csv::Error> {
    let kind = rows.first().map(|r| r.key.kind()).unwrap_or(SweepKind::Weights);
    let with_t = matches!(kind, SweepKind::Weights | SweepKind::Hogs);
    let with_global = rows.iter().any(|r| r.global_objective.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = vec![kind.key_header().into(), "status".into()];
    header.extend((0..5).map(|l| format!("f{l}")));
    if with_t {
        header.extend((0..5).map(|l| format!("t{l}")));
    }
    header.extend(["objective", "#iter", "#consB", "#consP"].map(String::from));
    if with_global {
        header.push("global".into());
    }
    if options.timing {
        header.push("time_s".into());
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = vec![row.key.to_string(), row.status.to_string()];
        match &row.components {
            Some(c) => rec.extend(c.0.iter().map(|v| format!("{v:.5e}"))),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        if with_t {
            rec.extend(row.t.iter().map(|t| match t {
                Some(t) => format!("{t:.2}"),
                None => "n/a".into(),
            }));
        }
        rec.push(row.objective.map(|v| format!("{v:.5e}")).unwrap_or_default());
        rec.push(row.iterations.to_string());
        rec.push(row.added_moq.to_string());
        rec.push(row.added_mpa.to_string());
        if with_global {
            rec.push(row.global_objective.map(|v| format!("{v:.5e}")).unwrap_or_default());
        }
        if options.timing {
            rec.push(significant(row.wall_time.as_secs_f64()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(significant(0.0), "0");
        assert_eq!(significant(100.0), "100");
        assert_eq!(significant(1.0 / 3.0), "0.333333");
        assert_eq!(significant(123456.789), "123457");
        assert_eq!(significant(18125.0), "18125");
        assert_eq!(significant(0.745), "0.745");
        assert_eq!(significant(2.5e7), "2.50000e7");
    }

    #[test]
    fn deterioration_formula() {
        assert!((deterioration(110.0, 100.0).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(deterioration(5.0, 0.0), None);
    }
}
