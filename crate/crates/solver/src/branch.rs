//! LP and MILP drivers on top of the simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use crate::error::SolverError;
use crate::options::SolverOptions;
use crate::outcome::{SolveOutcome, SolveStats, Status};
use crate::problem::LinearProgram;
use crate::simplex::{self, Basis, LpResult, LpStatus, SimplexParams, StandardForm};

pub(crate) fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<SolveOutcome, SolverError> {
    lp.validate()?;
    opts.validate()?;
    let start = Instant::now();
    let sf = StandardForm::new(lp);
    let params = SimplexParams {
        feasibility_tol: opts.feasibility_tolerance,
        optimality_tol: opts.optimality_tolerance,
        deadline: Some(start + opts.time_limit),
    };
    let mut outcome = if lp.has_binaries() {
        BranchAndBound::new(lp, &sf, opts, params).run()?
    } else {
        solve_lp(lp, &sf, params)?
    };
    outcome.stats.wall_time = start.elapsed();
    Ok(outcome)
}

fn solve_lp(
    lp: &LinearProgram,
    sf: &StandardForm,
    params: SimplexParams,
) -> Result<SolveOutcome, SolverError> {
    let res = simplex::solve(sf, &sf.lower, &sf.upper, None, params)?;
    let mut stats = SolveStats {
        iterations: res.iterations,
        nodes: 1,
        ..SolveStats::default()
    };
    let status = match res.status {
        LpStatus::Optimal => Status::Optimal,
        LpStatus::Infeasible => Status::Infeasible,
        LpStatus::Unbounded => Status::Unbounded,
        LpStatus::TimeLimit => Status::TimeLimit,
    };
    if status != Status::Optimal {
        return Ok(SolveOutcome::without_solution(status, stats));
    }
    let values = primal_values(lp, sf, &res);
    let objective = lp.objective_value(&values);
    stats.best_bound = Some(objective);
    Ok(SolveOutcome {
        status,
        values: Some(values),
        objective: Some(objective),
        duals: Some(sf.unscale_duals(&res.y)),
        stats,
    })
}

/// Unscaled structural values clipped to their declared bounds.
fn primal_values(lp: &LinearProgram, sf: &StandardForm, res: &LpResult) -> Vec<f64> {
    sf.unscale_primal(&res.x)
        .into_iter()
        .zip(lp.variables())
        .map(|(v, var)| v.clamp(var.lower, var.upper))
        .collect()
}

struct Node {
    id: u64,
    depth: u32,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    warm: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct BranchAndBound<'a> {
    lp: &'a LinearProgram,
    sf: &'a StandardForm,
    opts: &'a SolverOptions,
    params: SimplexParams,
    binaries: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    stats: SolveStats,
    next_id: u64,
}

impl<'a> BranchAndBound<'a> {
    fn new(
        lp: &'a LinearProgram,
        sf: &'a StandardForm,
        opts: &'a SolverOptions,
        params: SimplexParams,
    ) -> Self {
        Self {
            lp,
            sf,
            opts,
            params,
            binaries: lp.binaries().map(|v| v.index()).collect(),
            incumbent: None,
            stats: SolveStats::default(),
            next_id: 0,
        }
    }

    fn gap(&self, incumbent: f64) -> f64 {
        self.opts
            .optimality_tolerance
            .max(self.opts.relative_gap * incumbent.abs())
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => bound >= inc - self.gap(*inc),
            None => false,
        }
    }

    fn node(&mut self, depth: u32, bound: f64, fixings: Vec<(usize, f64)>, warm: Option<Rc<Basis>>) -> Node {
        let id = self.next_id;
        self.next_id += 1;
        Node {
            id,
            depth,
            bound,
            fixings,
            warm,
        }
    }

    fn bounds_with(&self, fixings: &[(usize, f64)]) -> (Vec<f64>, Vec<f64>) {
        let mut lower = self.sf.lower.clone();
        let mut upper = self.sf.upper.clone();
        for &(j, v) in fixings {
            let scaled = v / self.sf.col_scale(j);
            lower[j] = scaled;
            upper[j] = scaled;
        }
        (lower, upper)
    }

    fn run(mut self) -> Result<SolveOutcome, SolverError> {
        let mut heap = BinaryHeap::new();
        let root = self.node(0, f64::NEG_INFINITY, Vec::new(), None);
        heap.push(root);
        let mut limit: Option<Status> = None;

        while let Some(node) = heap.pop() {
            if self.prunable(node.bound) {
                heap.clear();
                break;
            }
            if let Some(max) = self.opts.node_limit {
                if self.stats.nodes >= max {
                    heap.push(node);
                    limit = Some(Status::NodeLimit);
                    break;
                }
            }
            let (lower, upper) = self.bounds_with(&node.fixings);
            let res = simplex::solve(self.sf, &lower, &upper, node.warm.as_deref(), self.params)?;
            self.stats.iterations += res.iterations;
            self.stats.nodes += 1;
            match res.status {
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    if node.depth == 0 {
                        return Ok(SolveOutcome::without_solution(
                            Status::Unbounded,
                            self.stats,
                        ));
                    }
                    continue;
                }
                LpStatus::TimeLimit => {
                    heap.push(node);
                    limit = Some(Status::TimeLimit);
                    break;
                }
                LpStatus::Optimal => {}
            }
            let bound = res.objective.max(node.bound);
            if self.prunable(bound) {
                continue;
            }
            let values = primal_values(self.lp, self.sf, &res);
            let basis = Rc::new(res.basis);

            let mut branch_on = self.most_fractional(&values, &node.fixings, self.opts.integrality_tolerance);
            if branch_on.is_none() {
                // Integral within tolerance: fix the binaries exactly and
                // re-solve so big-M rows see true zeros.
                let mut fixings = node.fixings.clone();
                for &j in &self.binaries {
                    if !fixings.iter().any(|&(k, _)| k == j) {
                        fixings.push((j, values[j].round()));
                    }
                }
                let (pl, pu) = self.bounds_with(&fixings);
                let polished = simplex::solve(self.sf, &pl, &pu, Some(&basis), self.params)?;
                self.stats.iterations += polished.iterations;
                if polished.status == LpStatus::TimeLimit {
                    heap.push(node);
                    limit = Some(Status::TimeLimit);
                    break;
                }
                if polished.status == LpStatus::Optimal {
                    let pv = primal_values(self.lp, self.sf, &polished);
                    let obj = self.lp.objective_value(&pv);
                    if self.incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                        self.stats.incumbents.push(obj);
                        self.incumbent = Some((obj, pv));
                    }
                    if obj <= bound + self.gap(obj) {
                        continue;
                    }
                }
                // The polished point is worse than the relaxation: keep
                // branching on whichever binary is least integral.
                branch_on = self.most_fractional(&values, &node.fixings, 0.0);
                if branch_on.is_none() {
                    continue;
                }
            }
            let j = branch_on.expect("branch variable");
            for v in [0.0, 1.0] {
                let mut fixings = node.fixings.clone();
                fixings.push((j, v));
                let child = self.node(node.depth + 1, bound, fixings, Some(Rc::clone(&basis)));
                heap.push(child);
            }
        }

        let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let status = limit.unwrap_or(Status::Optimal);
        match self.incumbent.take() {
            Some((obj, values)) => {
                self.stats.best_bound = Some(if status == Status::Optimal {
                    obj
                } else {
                    open_bound.min(obj)
                });
                Ok(SolveOutcome {
                    status,
                    values: Some(values),
                    objective: Some(obj),
                    duals: None,
                    stats: self.stats,
                })
            }
            None => {
                let status = limit.unwrap_or(Status::Infeasible);
                if status != Status::Infeasible && open_bound.is_finite() {
                    self.stats.best_bound = Some(open_bound);
                }
                Ok(SolveOutcome::without_solution(status, self.stats))
            }
        }
    }

    /// Free binary farthest from integrality beyond `tol`; ties go to the
    /// lowest index.
    fn most_fractional(&self, values: &[f64], fixings: &[(usize, f64)], tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            if fixings.iter().any(|&(k, _)| k == j) {
                continue;
            }
            let frac = (values[j] - values[j].floor()).min(values[j].ceil() - values[j]);
            if frac > tol && best.is_none_or(|(_, b)| frac > b) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }
}
