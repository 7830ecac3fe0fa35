//! Bounded-variable revised simplex, dual and primal.
//!
//! Every row `a x {<=,=,>=} b` gets a logical variable `s` so the working
//! system is `A x + s = b` with sense-dependent bounds on `s`. The initial
//! basis is all logicals, or a warm start.
//!
//! A dual feasible start (nonnegative costs, or a parent basis in branch
//! and bound) goes through the dual simplex with steepest-edge pricing;
//! costs are shifted slightly once dual degeneracy sets in. A primal pass
//! then cleans up and confirms optimality under the true costs.
//!
//! Otherwise bounds are perturbed and infeasible basics are driven out
//! with a composite phase 1 (minimize the sum of bound violations), then
//! the real objective is minimized. Pricing is Dantzig with a Harris
//! two-pass ratio test; after a run of degenerate pivots the method falls
//! back to Bland's rule until progress resumes.

use std::time::Instant;

use crate::error::SolverError;
use crate::lu::BasisFactor;
use crate::problem::{LinearProgram, Sense};

/// Factor updates between refactorizations.
const REFACTOR_INTERVAL: usize = 100;
/// Smallest |alpha| accepted as a pivot element in the ratio test.
const PIVOT_TOLERANCE: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_THRESHOLD: usize = 1000;
const SCALING_PASSES: usize = 6;
/// Relative outward shift of bounds against degeneracy.
const PERTURBATION: f64 = 1e-6;
/// Relative size of the cost shifts used by the dual phase.
const COST_PERTURBATION: f64 = 5e-7;
/// Consecutive dual degenerate pivots before the costs are shifted.
const DUAL_SHIFT_THRESHOLD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic variable with no finite bound, held at zero.
    Free,
}

/// Final basis of a solve, reusable as a warm start for a problem with
/// the same rows and columns but different bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub(crate) status: Vec<VarStatus>,
}

/// A scaled copy of a [`LinearProgram`] in working form.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    /// Row-wise copy of the structural part.
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    /// Bounds of structurals followed by logicals, scaled.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    rhs: Vec<f64>,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
}

impl StandardForm {
    pub fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_variables();
        let m = lp.num_constraints();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, c) in lp.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                cols[v.0].push((r, a));
            }
        }
        let (row_scale, col_scale) = geometric_scaling(&cols, m);
        for (j, col) in cols.iter_mut().enumerate() {
            for e in col.iter_mut() {
                e.1 *= row_scale[e.0] * col_scale[j];
            }
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for (j, v) in lp.variables().iter().enumerate() {
            lower.push(v.lower / col_scale[j]);
            upper.push(v.upper / col_scale[j]);
        }
        for c in lp.constraints() {
            let (l, u) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        let cost = lp
            .objective()
            .iter()
            .zip(&col_scale)
            .map(|(c, s)| c * s)
            .collect();
        let rhs = lp
            .constraints()
            .iter()
            .zip(&row_scale)
            .map(|(c, s)| c.rhs * s)
            .collect();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &(r, a) in col {
                rows[r].push((j, a));
            }
        }
        StandardForm {
            n,
            m,
            cols,
            rows,
            cost,
            lower,
            upper,
            rhs,
            col_scale,
            row_scale,
        }
    }

    pub fn col_scale(&self, j: usize) -> f64 {
        self.col_scale[j]
    }

    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            ColumnRef::Structural(&self.cols[j])
        } else {
            ColumnRef::Logical(j - self.n)
        }
    }

    fn dense_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.column(j) {
            ColumnRef::Structural(col) => {
                for &(r, a) in col {
                    out[r] = a;
                }
            }
            ColumnRef::Logical(r) => out[r] = 1.0,
        }
    }

    fn sparse_column(&self, j: usize) -> Vec<(usize, f64)> {
        match self.column(j) {
            ColumnRef::Structural(col) => col.to_vec(),
            ColumnRef::Logical(r) => vec![(r, 1.0)],
        }
    }

    /// Unscaled structural values.
    pub fn unscale_primal(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| x[j] * self.col_scale[j]).collect()
    }

    pub fn unscale_duals(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect()
    }
}

enum ColumnRef<'a> {
    Structural(&'a [(usize, f64)]),
    Logical(usize),
}

/// Power-of-two geometric-mean row and column scaling.
fn geometric_scaling(cols: &[Vec<(usize, f64)>], m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = cols.len();
    let mut rs = vec![1.0f64; m];
    let mut cs = vec![1.0f64; n];
    for _ in 0..SCALING_PASSES {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for (j, col) in cols.iter().enumerate() {
            for &(r, a) in col {
                let v = (a * cs[j]).abs();
                if v > 0.0 {
                    rmin[r] = rmin[r].min(v);
                    rmax[r] = rmax[r].max(v);
                }
            }
        }
        for r in 0..m {
            if rmax[r] > 0.0 {
                rs[r] = pow2(1.0 / (rmin[r] * rmax[r]).sqrt());
            }
        }
        for (j, col) in cols.iter().enumerate() {
            let mut cmin = f64::INFINITY;
            let mut cmax = 0.0f64;
            for &(r, a) in col {
                let v = (a * rs[r]).abs();
                if v > 0.0 {
                    cmin = cmin.min(v);
                    cmax = cmax.max(v);
                }
            }
            if cmax > 0.0 {
                cs[j] = pow2(1.0 / (cmin * cmax).sqrt());
            }
        }
    }
    (rs, cs)
}

fn pow2(x: f64) -> f64 {
    2f64.powi(x.log2().round().clamp(-60.0, 60.0) as i32)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexParams {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpResult {
    pub status: LpStatus,
    /// Scaled values of structurals and logicals.
    pub x: Vec<f64>,
    /// Scaled row duals.
    pub y: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    pub iterations: u64,
}

/// Solves `sf` with the bounds `lower`/`upper` (scaled, length n+m).
pub(crate) fn solve(
    sf: &StandardForm,
    lower: &[f64],
    upper: &[f64],
    warm: Option<&Basis>,
    params: SimplexParams,
) -> Result<LpResult, SolverError> {
    let mut s = Simplex::new(sf, lower, upper, warm, params)?;
    s.run()
}

struct Simplex<'a> {
    sf: &'a StandardForm,
    /// Working bounds, perturbed outward until the first optimum.
    lower: Vec<f64>,
    upper: Vec<f64>,
    true_lower: &'a [f64],
    true_upper: &'a [f64],
    perturbed: bool,
    /// Cost shifts that keep the dual phase away from dual degeneracy.
    cost_shift: Vec<f64>,
    params: SimplexParams,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    factor: BasisFactor,
    iterations: u64,
    work_m: Vec<f64>,
    work_m2: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(
        sf: &'a StandardForm,
        lower: &'a [f64],
        upper: &'a [f64],
        warm: Option<&Basis>,
        params: SimplexParams,
    ) -> Result<Self, SolverError> {
        let (n, m) = (sf.n, sf.m);
        let total = n + m;
        let mut status = match warm {
            Some(b)
                if b.status.len() == total
                    && b.status.iter().filter(|s| **s == VarStatus::Basic).count() == m =>
            {
                b.status.clone()
            }
            _ => {
                let mut st = vec![VarStatus::AtLower; total];
                for s in st.iter_mut().skip(n) {
                    *s = VarStatus::Basic;
                }
                st
            }
        };
        // A basic fixed column would be free to drift within the
        // feasibility tolerance, which big-M rows amplify. Hand its slot to
        // the logical of a row it touches.
        if warm.is_some() {
            for j in 0..n {
                if status[j] != VarStatus::Basic || lower[j] != upper[j] {
                    continue;
                }
                status[j] = VarStatus::AtLower;
                let replacement = sf
                    .sparse_column(j)
                    .iter()
                    .map(|&(r, _)| n + r)
                    .chain(n..total)
                    .find(|&l| status[l] != VarStatus::Basic);
                if let Some(l) = replacement {
                    status[l] = VarStatus::Basic;
                }
            }
        }
        let mut x = vec![0.0; total];
        for j in 0..total {
            if status[j] != VarStatus::Basic {
                let (st, val) = nonbasic_position(status[j], lower[j], upper[j]);
                status[j] = st;
                x[j] = val;
            }
        }
        let basis: Vec<usize> = (0..total).filter(|&j| status[j] == VarStatus::Basic).collect();
        let mut s = Simplex {
            sf,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            true_lower: lower,
            true_upper: upper,
            perturbed: false,
            cost_shift: Vec::new(),
            params,
            x,
            status,
            basis,
            factor: BasisFactor::factorize(0, &[]).expect("empty factor"),
            iterations: 0,
            work_m: vec![0.0; m],
            work_m2: vec![0.0; m],
        };
        s.refactor()?;
        Ok(s)
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.sf.m;
        for _attempt in 0..3 {
            let columns: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.sf.sparse_column(j)).collect();
            match BasisFactor::factorize(m, &columns) {
                Ok(f) => {
                    self.factor = f;
                    self.recompute_basic_values();
                    return Ok(());
                }
                Err(sing) => {
                    // Swap deficient columns for the logicals of unpivoted rows.
                    for (&slot, &row) in sing.deficient_slots.iter().zip(&sing.free_rows) {
                        let out = self.basis[slot];
                        let logical = self.sf.n + row;
                        let (st, val) =
                            nonbasic_position(VarStatus::AtLower, self.lower[out], self.upper[out]);
                        self.status[out] = st;
                        self.x[out] = val;
                        self.status[logical] = VarStatus::Basic;
                        self.basis[slot] = logical;
                    }
                }
            }
        }
        Err(SolverError::Numerical("basis repair failed".into()))
    }

    /// x_B = B^{-1} (b - N x_N).
    fn recompute_basic_values(&mut self) {
        let n = self.sf.n;
        let w = &mut self.work_m;
        w.copy_from_slice(&self.sf.rhs);
        for j in 0..n + self.sf.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            match self.sf.column(j) {
                ColumnRef::Structural(col) => {
                    for &(r, a) in col {
                        w[r] -= a * xj;
                    }
                }
                ColumnRef::Logical(r) => w[r] -= xj,
            }
        }
        let xb = &mut self.work_m2;
        self.factor.ftran(w, xb);
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
    }

    fn tol(&self, bound: f64) -> f64 {
        self.params.feasibility_tol * bound.abs().max(1.0)
    }

    /// Dual simplex from a dual feasible start, primal otherwise. The
    /// primal pass also verifies the dual result.
    fn run(&mut self) -> Result<LpResult, SolverError> {
        if self.dual_feasible() {
            let done = self.run_dual()?;
            self.cost_shift.clear();
            if let Some(done) = done {
                return Ok(done);
            }
            if !self.primal_feasible() {
                self.apply_perturbation();
            }
        } else {
            self.apply_perturbation();
        }
        self.run_primal()
    }

    fn duals(&self, y: &mut [f64]) {
        let mut c: Vec<f64> = self.basis.iter().map(|&j| self.cost(j)).collect();
        self.factor.btran(&mut c, y);
    }

    fn dual_feasible(&self) -> bool {
        let mut y = vec![0.0; self.sf.m];
        self.duals(&mut y);
        let dtol = self.params.optimality_tol;
        (0..self.sf.n + self.sf.m).all(|j| {
            if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                return true;
            }
            let d = self.cost(j) - self.column_dot(j, &y);
            match self.status[j] {
                VarStatus::AtLower => d >= -dtol,
                VarStatus::AtUpper => d <= dtol,
                VarStatus::Free => d.abs() <= dtol,
                VarStatus::Basic => true,
            }
        })
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&j| {
            let xj = self.x[j];
            xj >= self.lower[j] - self.tol(self.lower[j]) && xj <= self.upper[j] + self.tol(self.upper[j])
        })
    }

    fn apply_perturbation(&mut self) {
        let (lo, up) = perturb(self.true_lower, self.true_upper);
        self.lower = lo;
        self.upper = up;
        self.perturbed = true;
        for j in 0..self.sf.n + self.sf.m {
            if self.status[j] != VarStatus::Basic {
                let (st, val) = nonbasic_position(self.status[j], self.lower[j], self.upper[j]);
                self.status[j] = st;
                self.x[j] = val;
            }
        }
        self.recompute_basic_values();
    }

    /// Bounded dual simplex with dual steepest-edge pricing: the basic
    /// with the largest squared infeasibility per edge weight leaves, the
    /// entering column comes from a Harris two-pass dual ratio test.
    /// Returns a result for infeasibility or the time limit, `None` once the
    /// basis is primal feasible or when progress stalls.
    fn run_dual(&mut self) -> Result<Option<LpResult>, SolverError> {
        let (n, m) = (self.sf.n, self.sf.m);
        let total = n + m;
        let max_iterations = self.iterations + 50 * total as u64 + 20_000;
        let dtol = self.params.optimality_tol;
        let mut y = vec![0.0; m];
        let mut rho = vec![0.0; m];
        let mut unit = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut tau = vec![0.0; m];
        let mut colbuf = vec![0.0; m];
        let mut row = vec![0.0; total];
        let mut reduced = vec![0.0; total];
        let mut weights = vec![1.0; m];
        let mut degenerate_run = 0usize;
        let mut fresh_duals = false;

        loop {
            if self.iterations.is_multiple_of(32) {
                if let Some(deadline) = self.params.deadline {
                    if Instant::now() >= deadline {
                        self.duals(&mut y);
                        return Ok(Some(self.result(LpStatus::TimeLimit, y)));
                    }
                }
            }
            if degenerate_run >= DUAL_SHIFT_THRESHOLD && self.cost_shift.is_empty() {
                self.shift_costs();
                degenerate_run = 0;
                fresh_duals = false;
            }
            if self.iterations > max_iterations || degenerate_run >= STALL_THRESHOLD {
                return Ok(None);
            }
            if !fresh_duals {
                self.duals(&mut y);
                for (j, d) in reduced.iter_mut().enumerate().take(total) {
                    *d = if self.status[j] == VarStatus::Basic {
                        0.0
                    } else {
                        self.cost(j) - self.column_dot(j, &y)
                    };
                }
                fresh_duals = true;
            }

            let mut leave: Option<(usize, f64, Bound)> = None;
            for (k, &j) in self.basis.iter().enumerate() {
                let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
                let (viol, bound) = if xj < l - self.tol(l) {
                    (l - xj, Bound::Lower)
                } else if xj > u + self.tol(u) {
                    (xj - u, Bound::Upper)
                } else {
                    continue;
                };
                let score = viol * viol / weights[k];
                if leave.is_none_or(|(_, v, _)| score > v) {
                    leave = Some((k, score, bound));
                }
            }
            let Some((r, _, bound)) = leave else {
                return Ok(None);
            };
            let p = self.basis[r];
            let s = match bound {
                Bound::Upper => 1.0,
                Bound::Lower => -1.0,
            };

            unit.iter_mut().for_each(|v| *v = 0.0);
            unit[r] = 1.0;
            self.factor.btran(&mut unit, &mut rho);
            row.iter_mut().for_each(|v| *v = 0.0);
            for (i, &ri) in rho.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                for &(j, a) in &self.sf.rows[i] {
                    row[j] += ri * a;
                }
                row[n + i] = ri;
            }

            let mut theta_max = f64::INFINITY;
            for j in 0..total {
                let a = row[j];
                if a.abs() < PIVOT_TOLERANCE || self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = reduced[j];
                let sa = s * a;
                let limit = match self.status[j] {
                    VarStatus::AtLower if sa > 0.0 => (d.max(0.0) + dtol) / sa,
                    VarStatus::AtUpper if sa < 0.0 => (d.min(0.0) - dtol) / sa,
                    VarStatus::Free => (d.abs() + dtol) / a.abs(),
                    _ => continue,
                };
                theta_max = theta_max.min(limit);
            }
            if theta_max == f64::INFINITY {
                self.duals(&mut y);
                return Ok(Some(self.result(LpStatus::Infeasible, y)));
            }
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                let a = row[j];
                if a.abs() < PIVOT_TOLERANCE || self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = reduced[j];
                let sa = s * a;
                let ratio = match self.status[j] {
                    VarStatus::AtLower if sa > 0.0 => d.max(0.0) / sa,
                    VarStatus::AtUpper if sa < 0.0 => d.min(0.0) / sa,
                    VarStatus::Free => d.abs() / a.abs(),
                    _ => continue,
                };
                if ratio <= theta_max && entering.is_none_or(|(_, best, _)| a.abs() > best) {
                    entering = Some((j, a.abs(), ratio));
                }
            }
            let (q, _, theta_d) = entering.expect("a candidate attains theta_max");

            self.sf.dense_column(q, &mut colbuf);
            self.factor.ftran(&mut colbuf, &mut alpha);
            let alpha_r = alpha[r];
            if (alpha_r - row[q]).abs() > 1e-6 * (1.0 + alpha_r.abs()) || alpha_r.abs() < PIVOT_TOLERANCE {
                if self.factor.num_updates() == 0 {
                    return Ok(None);
                }
                self.refactor()?;
                fresh_duals = false;
                continue;
            }

            // Edge weights (Forrest-Goldfarb update).
            let mut w = rho.clone();
            self.factor.ftran(&mut w, &mut tau);
            let wr = weights[r];
            for k in 0..m {
                if k == r || alpha[k] == 0.0 {
                    continue;
                }
                let ratio = alpha[k] / alpha_r;
                let updated = weights[k] - 2.0 * ratio * tau[k] + ratio * ratio * wr;
                weights[k] = updated.max(ratio * ratio).max(1e-8);
            }
            weights[r] = (wr / (alpha_r * alpha_r)).max(1e-8);

            self.iterations += 1;
            if theta_d <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            // Reduced costs move along the pivot row.
            let step = s * theta_d;
            if step != 0.0 {
                for j in 0..total {
                    if row[j] != 0.0 && self.status[j] != VarStatus::Basic {
                        reduced[j] -= step * row[j];
                    }
                }
            }
            reduced[q] = 0.0;
            reduced[p] = -step;

            let target = self.bound_value(p, bound);
            let dx = (self.x[p] - target) / alpha_r;
            self.x[q] += dx;
            for (k, &j) in self.basis.iter().enumerate() {
                if alpha[k] != 0.0 {
                    self.x[j] -= alpha[k] * dx;
                }
            }
            self.x[p] = target;
            self.status[p] = match bound {
                Bound::Lower => VarStatus::AtLower,
                Bound::Upper => VarStatus::AtUpper,
            };
            self.basis[r] = q;
            self.status[q] = VarStatus::Basic;
            self.factor.update(r, &alpha);
            if self.factor.num_updates() >= REFACTOR_INTERVAL {
                self.refactor()?;
                fresh_duals = false;
            }
        }
    }

    fn run_primal(&mut self) -> Result<LpResult, SolverError> {
        let (n, m) = (self.sf.n, self.sf.m);
        let total = n + m;
        let max_iterations = 50 * total as u64 + 20_000;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut verified = false;
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut colbuf = vec![0.0; m];

        loop {
            if self.iterations.is_multiple_of(32) {
                if let Some(deadline) = self.params.deadline {
                    if Instant::now() >= deadline {
                        return Ok(self.result(LpStatus::TimeLimit, y));
                    }
                }
            }
            if self.iterations > max_iterations {
                return Err(SolverError::Numerical(format!(
                    "simplex exceeded {max_iterations} iterations"
                )));
            }

            // Phase selection.
            let mut infeasible = false;
            for (k, &j) in self.basis.iter().enumerate() {
                let xj = self.x[j];
                cb[k] = if xj < self.lower[j] - self.tol(self.lower[j]) {
                    infeasible = true;
                    -1.0
                } else if xj > self.upper[j] + self.tol(self.upper[j]) {
                    infeasible = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !infeasible {
                for (k, &j) in self.basis.iter().enumerate() {
                    cb[k] = self.cost(j);
                }
            }
            let mut c = cb.clone();
            self.factor.btran(&mut c, &mut y);

            // Pricing.
            let dtol = self.params.optimality_tol;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let cj = if infeasible { 0.0 } else { self.cost(j) };
                let d = cj - self.column_dot(j, &y);
                let eligible = match st {
                    VarStatus::AtLower => d < -dtol,
                    VarStatus::AtUpper => d > dtol,
                    VarStatus::Free => d.abs() > dtol,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }

            let Some((q, dq)) = entering else {
                if !verified && self.factor.num_updates() > 0 {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                if !infeasible && self.perturbed {
                    self.remove_perturbation();
                    degenerate_run = 0;
                    bland = false;
                    continue;
                }
                let status = if infeasible {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
                return Ok(self.result(status, y));
            };
            verified = false;

            self.sf.dense_column(q, &mut colbuf);
            self.factor.ftran(&mut colbuf, &mut alpha);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            let step = if bland {
                self.textbook_ratio(q, dir, &alpha)
            } else {
                self.harris_ratio(q, dir, &alpha)
            };
            let (theta, leave) = match step {
                Step::Unbounded => {
                    if infeasible {
                        return Err(SolverError::Numerical(
                            "phase 1 direction without a blocking variable".into(),
                        ));
                    }
                    return Ok(self.result(LpStatus::Unbounded, y));
                }
                Step::Flip(theta) => (theta, None),
                Step::Pivot(theta, slot, target) => (theta, Some((slot, target))),
            };

            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= STALL_THRESHOLD {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            self.x[q] += dir * theta;
            if theta != 0.0 {
                for (k, &j) in self.basis.iter().enumerate() {
                    if alpha[k] != 0.0 {
                        self.x[j] -= dir * alpha[k] * theta;
                    }
                }
            }
            match leave {
                None => {
                    self.status[q] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((slot, target)) => {
                    let out = self.basis[slot];
                    match target {
                        Bound::Lower => {
                            self.x[out] = self.lower[out];
                            self.status[out] = VarStatus::AtLower;
                        }
                        Bound::Upper => {
                            self.x[out] = self.upper[out];
                            self.status[out] = VarStatus::AtUpper;
                        }
                    }
                    self.basis[slot] = q;
                    self.status[q] = VarStatus::Basic;
                    self.factor.update(slot, &alpha);
                    if self.factor.num_updates() >= REFACTOR_INTERVAL {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    /// Restores the true bounds, moves nonbasics onto them and recomputes
    /// the basics; the main loop then cleans up any infeasibility.
    fn remove_perturbation(&mut self) {
        self.perturbed = false;
        self.lower.copy_from_slice(self.true_lower);
        self.upper.copy_from_slice(self.true_upper);
        for j in 0..self.sf.n + self.sf.m {
            if self.status[j] != VarStatus::Basic {
                let (st, val) = nonbasic_position(self.status[j], self.lower[j], self.upper[j]);
                self.status[j] = st;
                self.x[j] = val;
            }
        }
        self.recompute_basic_values();
    }

    fn cost(&self, j: usize) -> f64 {
        let base = if j < self.sf.n { self.sf.cost[j] } else { 0.0 };
        match self.cost_shift.get(j) {
            Some(shift) => base + shift,
            None => base,
        }
    }

    /// Raises the reduced cost of every nonbasic column away from zero in
    /// its dual feasible direction. Basic costs stay put, so the duals do
    /// not move.
    fn shift_costs(&mut self) {
        let total = self.sf.n + self.sf.m;
        let draws = uniform_draws(total);
        self.cost_shift = (0..total)
            .map(|j| {
                if self.lower[j] == self.upper[j] {
                    return 0.0;
                }
                let delta = COST_PERTURBATION * (1.0 + self.cost(j).abs()) * draws[j];
                match self.status[j] {
                    VarStatus::AtLower => delta,
                    VarStatus::AtUpper => -delta,
                    VarStatus::Free | VarStatus::Basic => 0.0,
                }
            })
            .collect();
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        match self.sf.column(j) {
            ColumnRef::Structural(col) => col.iter().map(|&(r, a)| a * y[r]).sum(),
            ColumnRef::Logical(r) => y[r],
        }
    }

    /// Bound a basic variable heads to when moving at `rate`, or `None`
    /// if it never blocks. Infeasible variables moving towards
    /// feasibility block at the bound they violate.
    fn blocking_bound(&self, j: usize, rate: f64) -> Option<Bound> {
        let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
        if rate < 0.0 {
            if xj > u + self.tol(u) {
                Some(Bound::Upper)
            } else if xj < l - self.tol(l) || l == f64::NEG_INFINITY {
                None
            } else {
                Some(Bound::Lower)
            }
        } else if xj < l - self.tol(l) {
            Some(Bound::Lower)
        } else if xj > u + self.tol(u) || u == f64::INFINITY {
            None
        } else {
            Some(Bound::Upper)
        }
    }

    fn bound_value(&self, j: usize, b: Bound) -> f64 {
        match b {
            Bound::Lower => self.lower[j],
            Bound::Upper => self.upper[j],
        }
    }

    fn harris_ratio(&self, q: usize, dir: f64, alpha: &[f64]) -> Step {
        let flip = self.upper[q] - self.lower[q];
        let mut theta_max = f64::INFINITY;
        for (k, &j) in self.basis.iter().enumerate() {
            if alpha[k].abs() < PIVOT_TOLERANCE {
                continue;
            }
            let rate = -dir * alpha[k];
            if let Some(b) = self.blocking_bound(j, rate) {
                let bv = self.bound_value(j, b);
                let relaxed = ((bv - self.x[j]) / rate).abs() + self.tol(bv) / rate.abs();
                theta_max = theta_max.min(relaxed);
            }
        }
        if flip.is_finite() && flip <= theta_max {
            return Step::Flip(flip);
        }
        if theta_max == f64::INFINITY {
            return Step::Unbounded;
        }
        let mut best: Option<(f64, f64, usize, Bound)> = None;
        for (k, &j) in self.basis.iter().enumerate() {
            if alpha[k].abs() < PIVOT_TOLERANCE {
                continue;
            }
            let rate = -dir * alpha[k];
            if let Some(b) = self.blocking_bound(j, rate) {
                let bv = self.bound_value(j, b);
                let exact = ((bv - self.x[j]) / rate).max(0.0);
                if exact <= theta_max {
                    let mag = alpha[k].abs();
                    if best.is_none_or(|(bm, _, bk, _)| mag > bm || (mag == bm && j < self.basis[bk]))
                    {
                        best = Some((mag, exact, k, b));
                    }
                }
            }
        }
        match best {
            Some((_, theta, k, b)) => Step::Pivot(theta, k, b),
            None => Step::Unbounded,
        }
    }

    fn textbook_ratio(&self, q: usize, dir: f64, alpha: &[f64]) -> Step {
        let flip = self.upper[q] - self.lower[q];
        let mut best: Option<(f64, usize, usize, Bound)> = None;
        for (k, &j) in self.basis.iter().enumerate() {
            if alpha[k].abs() < PIVOT_TOLERANCE {
                continue;
            }
            let rate = -dir * alpha[k];
            if let Some(b) = self.blocking_bound(j, rate) {
                let bv = self.bound_value(j, b);
                let ratio = ((bv - self.x[j]) / rate).max(0.0);
                let better = match best {
                    None => true,
                    Some((br, bj, _, _)) => {
                        ratio < br - 1e-12 * (1.0 + br) || (ratio <= br + 1e-12 * (1.0 + br) && j < bj)
                    }
                };
                if better {
                    best = Some((ratio, j, k, b));
                }
            }
        }
        match best {
            Some((ratio, _, _, _)) if flip.is_finite() && flip <= ratio => Step::Flip(flip),
            Some((ratio, _, k, b)) => Step::Pivot(ratio, k, b),
            None if flip.is_finite() => Step::Flip(flip),
            None => Step::Unbounded,
        }
    }

    fn result(&self, status: LpStatus, y: Vec<f64>) -> LpResult {
        let objective = (0..self.sf.n).map(|j| self.sf.cost[j] * self.x[j]).sum();
        LpResult {
            status,
            x: self.x.clone(),
            y,
            objective,
            basis: Basis {
                status: self.status.clone(),
            },
            iterations: self.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot(f64, usize, Bound),
}

/// Widens every finite bound of a non-fixed variable by a small
/// deterministic amount so that degenerate vertices become proper ones.
fn perturb(lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    let draws = uniform_draws(lo.len());
    for j in 0..lo.len() {
        if lo[j] == up[j] {
            continue;
        }
        let u = draws[j];
        if lo[j].is_finite() {
            lo[j] -= PERTURBATION * (1.0 + lo[j].abs()) * u;
        }
        if up[j].is_finite() {
            up[j] += PERTURBATION * (1.0 + up[j].abs()) * u;
        }
    }
    (lo, up)
}

/// Deterministic xorshift draws in [0.5, 1).
fn uniform_draws(len: usize) -> Vec<f64> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + 0.5 * (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn nonbasic_position(preferred: VarStatus, lower: f64, upper: f64) -> (VarStatus, f64) {
    let at_lower = (VarStatus::AtLower, lower);
    let at_upper = (VarStatus::AtUpper, upper);
    match preferred {
        VarStatus::AtUpper if upper.is_finite() => at_upper,
        _ if lower.is_finite() => at_lower,
        _ if upper.is_finite() => at_upper,
        _ => (VarStatus::Free, 0.0),
    }
}


