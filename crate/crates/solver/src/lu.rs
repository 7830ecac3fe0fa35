//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The factorization is right-looking. Column and row singletons are
//! eliminated first (they produce no fill), the remaining nucleus is
//! pivoted with a Markowitz rule under threshold partial pivoting.
//! After a basis change the factor is extended by an eta column rather
//! than refactorized; the simplex refactorizes periodically.

/// Entries smaller than this are never accepted as pivots.
const PIVOT_ABS_MIN: f64 = 1e-11;
/// Threshold partial pivoting: a pivot must be at least this fraction of
/// the largest entry in its column.
const PIVOT_REL_MIN: f64 = 0.1;
/// Row singletons are accepted with a looser threshold.
const ROW_SINGLETON_REL_MIN: f64 = 0.01;
/// Number of lowest-count nucleus columns inspected per pivot.
const MARKOWITZ_CANDIDATES: usize = 4;

/// The basis could not be fully factorized: `deficient_slots` have no
/// acceptable pivot left and `free_rows` were never pivoted.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub deficient_slots: Vec<usize>,
    pub free_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Eta {
    slot: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_slot: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factorizes the `m x m` matrix whose `k`-th column is `columns[k]`
    /// (sparse `(row, value)` pairs).
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut cols: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (k, col) in cols.iter().enumerate() {
            for &(r, _) in col {
                rows[r].push(k);
            }
        }
        let mut row_count: Vec<usize> = rows.iter().map(Vec::len).collect();
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];

        let mut col_stack: Vec<usize> = (0..m).filter(|&k| cols[k].len() == 1).collect();
        col_stack.reverse();
        let mut row_stack: Vec<usize> = (0..m).filter(|&r| row_count[r] == 1).collect();
        row_stack.reverse();

        let mut f = BasisFactor {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_slot: Vec::with_capacity(m),
            pivot_val: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            etas: Vec::new(),
        };
        let mut deficient = Vec::new();
        let mut nucleus: Vec<usize> = Vec::new();
        let mut in_nucleus = false;
        let mut remaining = m;

        while remaining > 0 {
            let mut choice: Option<(usize, usize)> = None;

            while let Some(k) = col_stack.pop() {
                if col_active[k] && cols[k].len() == 1 && cols[k][0].1.abs() >= PIVOT_ABS_MIN {
                    choice = Some((cols[k][0].0, k));
                    break;
                }
            }
            if choice.is_none() {
                while let Some(r) = row_stack.pop() {
                    if !row_active[r] || row_count[r] != 1 {
                        continue;
                    }
                    let Some(q) = rows[r]
                        .iter()
                        .copied()
                        .find(|&c| col_active[c] && cols[c].iter().any(|&(i, _)| i == r))
                    else {
                        continue;
                    };
                    let colmax = cols[q].iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                    let a = entry(&cols[q], r).unwrap_or(0.0).abs();
                    if a >= PIVOT_ABS_MIN && a >= ROW_SINGLETON_REL_MIN * colmax {
                        choice = Some((r, q));
                        break;
                    }
                }
            }
            if choice.is_none() {
                if !in_nucleus {
                    nucleus = (0..m).filter(|&k| col_active[k]).collect();
                    in_nucleus = true;
                }
                choice = markowitz_pivot(&cols, &col_active, &row_count, &mut nucleus, &mut deficient);
                if choice.is_none() {
                    // only deficient columns remain
                    for (k, active) in col_active.iter_mut().enumerate() {
                        if *active {
                            *active = false;
                            if !deficient.contains(&k) {
                                deficient.push(k);
                            }
                        }
                    }
                    break;
                }
            }
            let (p, q) = choice.unwrap();
            f.eliminate(
                p,
                q,
                &mut cols,
                &mut rows,
                &mut row_count,
                &mut row_active,
                &mut col_active,
                &mut col_stack,
                &mut row_stack,
            );
            remaining -= 1;
        }

        if !deficient.is_empty() {
            deficient.sort_unstable();
            let free_rows: Vec<usize> = (0..m).filter(|&r| row_active[r]).collect();
            return Err(Singular {
                deficient_slots: deficient,
                free_rows,
            });
        }
        Ok(f)
    }

    #[allow(clippy::too_many_arguments)]
    fn eliminate(
        &mut self,
        p: usize,
        q: usize,
        cols: &mut [Vec<(usize, f64)>],
        rows: &mut [Vec<usize>],
        row_count: &mut [usize],
        row_active: &mut [bool],
        col_active: &mut [bool],
        col_stack: &mut Vec<usize>,
        row_stack: &mut Vec<usize>,
    ) {
        let piv = entry(&cols[q], p).expect("pivot entry present");
        col_active[q] = false;
        row_active[p] = false;

        // U row: remaining entries of row p.
        let u_begin = self.u_idx.len();
        let row_p = std::mem::take(&mut rows[p]);
        for &c in &row_p {
            if !col_active[c] {
                continue;
            }
            if let Some(pos) = cols[c].iter().position(|&(i, _)| i == p) {
                let (_, v) = cols[c].swap_remove(pos);
                self.u_idx.push(c);
                self.u_val.push(v);
                if cols[c].len() == 1 {
                    col_stack.push(c);
                }
            }
        }

        // L column: multipliers for the other rows of column q.
        let l_begin = self.l_idx.len();
        let col_q = std::mem::take(&mut cols[q]);
        for &(i, a) in &col_q {
            if i == p {
                continue;
            }
            self.l_idx.push(i);
            self.l_val.push(a / piv);
            row_count[i] -= 1;
        }

        // Schur complement update.
        let l_end = self.l_idx.len();
        let u_end = self.u_idx.len();
        for ui in u_begin..u_end {
            let c = self.u_idx[ui];
            let u = self.u_val[ui];
            for li in l_begin..l_end {
                let i = self.l_idx[li];
                let delta = self.l_val[li] * u;
                match cols[c].iter_mut().find(|(r, _)| *r == i) {
                    Some(e) => e.1 -= delta,
                    None => {
                        cols[c].push((i, -delta));
                        rows[i].push(c);
                        row_count[i] += 1;
                    }
                }
            }
        }
        for li in l_begin..l_end {
            let i = self.l_idx[li];
            if row_count[i] == 1 {
                row_stack.push(i);
            }
        }

        self.pivot_row.push(p);
        self.pivot_slot.push(q);
        self.pivot_val.push(piv);
        self.l_start.push(l_end);
        self.u_start.push(u_end);
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = w`. `w` is indexed by row and is destroyed; `x` is
    /// indexed by basis slot.
    pub fn ftran(&self, w: &mut [f64], x: &mut [f64]) {
        debug_assert!(w.len() == self.m && x.len() == self.m);
        let steps = self.pivot_row.len();
        for t in 0..steps {
            let wp = w[self.pivot_row[t]];
            if wp != 0.0 {
                for k in self.l_start[t]..self.l_start[t + 1] {
                    w[self.l_idx[k]] -= self.l_val[k] * wp;
                }
            }
        }
        for t in (0..steps).rev() {
            let mut v = w[self.pivot_row[t]];
            for k in self.u_start[t]..self.u_start[t + 1] {
                v -= self.u_val[k] * x[self.u_idx[k]];
            }
            x[self.pivot_slot[t]] = v / self.pivot_val[t];
        }
        for eta in &self.etas {
            let xr = x[eta.slot] / eta.pivot;
            x[eta.slot] = xr;
            if xr != 0.0 {
                for &(k, a) in &eta.entries {
                    x[k] -= a * xr;
                }
            }
        }
    }

    /// Solves `B^T y = c`. `c` is indexed by basis slot and is destroyed;
    /// `y` is indexed by row.
    pub fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        debug_assert!(c.len() == self.m && y.len() == self.m);
        for eta in self.etas.iter().rev() {
            let mut v = c[eta.slot];
            for &(k, a) in &eta.entries {
                v -= a * c[k];
            }
            c[eta.slot] = v / eta.pivot;
        }
        let steps = self.pivot_row.len();
        for t in 0..steps {
            let g = c[self.pivot_slot[t]] / self.pivot_val[t];
            y[self.pivot_row[t]] = g;
            if g != 0.0 {
                for k in self.u_start[t]..self.u_start[t + 1] {
                    c[self.u_idx[k]] -= self.u_val[k] * g;
                }
            }
        }
        for t in (0..steps).rev() {
            let mut v = y[self.pivot_row[t]];
            for k in self.l_start[t]..self.l_start[t + 1] {
                v -= self.l_val[k] * y[self.l_idx[k]];
            }
            y[self.pivot_row[t]] = v;
        }
    }

    /// Records that the column in `slot` was replaced by a column whose
    /// FTRAN image under the current factor is `alpha`.
    pub fn update(&mut self, slot: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(k, &a)| k != slot && a.abs() > 1e-14)
            .map(|(k, &a)| (k, a))
            .collect();
        self.etas.push(Eta {
            slot,
            pivot: alpha[slot],
            entries,
        });
    }
}

fn entry(col: &[(usize, f64)], row: usize) -> Option<f64> {
    col.iter().find(|&&(r, _)| r == row).map(|&(_, v)| v)
}

/// Markowitz search over the columns left in `nucleus`, which is pruned
/// of eliminated and deficient columns on the way.
fn markowitz_pivot(
    cols: &[Vec<(usize, f64)>],
    col_active: &[bool],
    row_count: &[usize],
    nucleus: &mut Vec<usize>,
    deficient: &mut Vec<usize>,
) -> Option<(usize, usize)> {
    loop {
        nucleus.retain(|&k| col_active[k]);
        // The few shortest columns, kept sorted by (count, index).
        let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(MARKOWITZ_CANDIDATES + 1);
        for &k in nucleus.iter() {
            let key = (cols[k].len(), k);
            if candidates.len() == MARKOWITZ_CANDIDATES && key >= candidates[MARKOWITZ_CANDIDATES - 1] {
                continue;
            }
            let pos = candidates.partition_point(|c| *c < key);
            candidates.insert(pos, key);
            candidates.truncate(MARKOWITZ_CANDIDATES);
        }
        if candidates.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64, usize, usize)> = None;
        let mut dropped = false;
        for &(count, k) in &candidates {
            let col = &cols[k];
            let colmax = col.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if colmax < PIVOT_ABS_MIN {
                deficient.push(k);
                nucleus.retain(|&c| c != k);
                dropped = true;
                continue;
            }
            for &(r, v) in col {
                let a = v.abs();
                if a < PIVOT_ABS_MIN || a < PIVOT_REL_MIN * colmax {
                    continue;
                }
                let cost = (row_count[r].saturating_sub(1)) * (count - 1);
                let better = match best {
                    None => true,
                    Some((bc, ba, _, _)) => cost < bc || (cost == bc && a > ba),
                };
                if better {
                    best = Some((cost, a, r, k));
                }
            }
        }
        match best {
            Some((_, _, r, k)) => return Some((r, k)),
            None if dropped => continue,
            None => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(cols: &[Vec<(usize, f64)>], x: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (k, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                out[r] += v * x[k];
            }
        }
        out
    }

    fn dense_tmul(cols: &[Vec<(usize, f64)>], y: &[f64]) -> Vec<f64> {
        cols.iter()
            .map(|col| col.iter().map(|&(r, v)| v * y[r]).sum())
            .collect()
    }

    fn random_nonsingular(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<(usize, f64)>> {
        // diagonally dominant under a random row permutation
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        (0..m)
            .map(|k| {
                let mut col = vec![(perm[k], 10.0 + rng.random::<f64>())];
                for _ in 0..3 {
                    let r = rng.random_range(0..m);
                    if col.iter().all(|&(x, _)| x != r) {
                        col.push((r, rng.random_range(-1.0..1.0)));
                    }
                }
                col
            })
            .collect()
    }

    #[test]
    fn solves_random_sparse_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [1, 2, 5, 20, 80] {
            let cols = random_nonsingular(&mut rng, m);
            let f = BasisFactor::factorize(m, &cols).unwrap();
            let x_true: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut b = dense_mul(&cols, &x_true, m);
            let mut x = vec![0.0; m];
            f.ftran(&mut b, &mut x);
            for k in 0..m {
                assert!((x[k] - x_true[k]).abs() < 1e-9, "m={m} k={k}");
            }
            let y_true: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut c = dense_tmul(&cols, &y_true);
            let mut y = vec![0.0; m];
            f.btran(&mut c, &mut y);
            for r in 0..m {
                assert!((y[r] - y_true[r]).abs() < 1e-9, "m={m} r={r}");
            }
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 30;
        let mut cols = random_nonsingular(&mut rng, m);
        let mut f = BasisFactor::factorize(m, &cols).unwrap();
        for step in 0..10 {
            let slot = (step * 7) % m;
            let mut new_col = cols[slot].clone();
            new_col[0].1 += 3.0;
            new_col.push(((slot + 1) % m, 0.5));
            new_col.sort_by_key(|e| e.0);
            new_col.dedup_by_key(|e| e.0);
            let mut w = vec![0.0; m];
            for &(r, v) in &new_col {
                w[r] += v;
            }
            let mut alpha = vec![0.0; m];
            f.ftran(&mut w, &mut alpha);
            f.update(slot, &alpha);
            cols[slot] = new_col;

            let x_true: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut b = dense_mul(&cols, &x_true, m);
            let mut x = vec![0.0; m];
            f.ftran(&mut b, &mut x);
            let y_true: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut c = dense_tmul(&cols, &y_true);
            let mut y = vec![0.0; m];
            f.btran(&mut c, &mut y);
            for k in 0..m {
                assert!((x[k] - x_true[k]).abs() < 1e-8);
                assert!((y[k] - y_true[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reports_singular_columns() {
        // columns 0 and 1 are parallel
        let cols = vec![
            vec![(0, 1.0), (1, 2.0)],
            vec![(0, 2.0), (1, 4.0)],
            vec![(2, 1.0)],
        ];
        let err = BasisFactor::factorize(3, &cols).unwrap_err();
        assert_eq!(err.deficient_slots.len(), 1);
        assert_eq!(err.free_rows.len(), 1);
    }
}
