//! Dense two-phase simplex with Bland's rule, sized for the oracle problems
//! (a few equality rows, up to a few thousand nonnegative unknowns).

use crate::error::{Error, Result};

/// Phase-one objective above this means the equalities cannot be met.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 200_000;

struct Tableau {
    /// Row-major `m x (n_cols + 1)`; the last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    active: Vec<bool>,
    n_cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        for row in self.rows.iter_mut() {
            let last = row.len() - 1;
            if row[last].abs() < 1e-15 {
                row[last] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64], iterations: &mut usize) -> Result<()> {
        loop {
            *iterations += 1;
            if *iterations > MAX_ITERATIONS {
                return Err(Error::IterationLimit(MAX_ITERATIONS));
            }
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..self.n_cols).find(|&j| {
                if !self.active[j] || self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = self
                    .rows
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &b)| cost[b] * row[j])
                    .sum();
                cost[j] - z < -REDUCED_COST_TOL
            });
            let Some(c) = entering else {
                return Ok(());
            };
            // Ratio test; ties go to the lowest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-14
                            || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                // The feasible region of a probability simplex is bounded.
                None => return Err(Error::Infeasible),
            }
        }
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }
}

/// Minimum and maximum of `c · x` subject to `A x = b`, `x ≥ 0`.
///
/// Phase one runs once; both optimizations start from the same feasible
/// basis. Returns [`Error::Infeasible`] when the phase-one optimum exceeds
/// [`FEASIBILITY_TOL`].
pub fn min_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<(f64, f64)> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n));

    let n_cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; n_cols + 1];
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = 1.0;
        row[n_cols] = sign * b[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        active: vec![true; n_cols],
        n_cols,
    };

    let mut iterations = 0;
    let phase1: Vec<f64> = (0..n_cols).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    t.optimize(&phase1, &mut iterations)?;
    if t.value(&phase1) > FEASIBILITY_TOL {
        return Err(Error::Infeasible);
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of others and are dropped.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let col = (0..n).find(|&j| t.rows[i][j].abs() > 1e-9 && !t.basis.contains(&j));
            match col {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for j in n..n_cols {
        t.active[j] = false;
    }

    let mut cost: Vec<f64> = c.to_vec();
    cost.resize(n_cols, 0.0);
    let mut t_max = Tableau {
        rows: t.rows.clone(),
        basis: t.basis.clone(),
        active: t.active.clone(),
        n_cols,
    };

    t.optimize(&cost, &mut iterations)?;
    let lo = t.value(&cost);

    let neg: Vec<f64> = cost.iter().map(|v| -v).collect();
    t_max.optimize(&neg, &mut iterations)?;
    let hi = t_max.value(&cost);
    Ok((lo, hi))
}
