//! Dense two-phase primal simplex for `min c^T z  s.t.  E z = r, z >= 0`.
//!
//! Bland's rule picks entering and leaving variables, so degenerate pivots
//! cannot cycle. Once the optimal basis is known, the primal values and the
//! simplex multipliers are recomputed from the original data by solving
//! `B z_B = r` and `B^T y = c_B`, which keeps tableau round-off out of the
//! returned duals.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    /// One multiplier per equality row, `c_j - y^T E_j >= 0` at optimality.
    pub duals: Vec<f64>,
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// `rows` keep a positive artificial after phase one; `z` is the
    /// structural part of the phase-one optimum.
    Infeasible { rows: Vec<usize>, z: Vec<f64> },
    Unbounded,
}

struct Tableau {
    rows: usize,
    /// structural columns followed by one artificial per row
    cols: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.cols;
        let p = self.at(row, col);
        for j in 0..cols {
            self.t[row * cols + j] /= p;
        }
        self.rhs[row] /= p;
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let factor = self.at(i, col);
            if factor == 0.0 {
                continue;
            }
            for j in 0..cols {
                let v = self.t[row * cols + j];
                self.t[i * cols + j] -= factor * v;
            }
            self.rhs[i] -= factor * self.rhs[row];
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb == 0.0 {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj -= cb * self.at(i, j);
            }
        }
        d
    }

    /// Runs Bland pivots on `cost` over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(cost);
            let entering = (0..allowed).find(|&j| d[j] < -PIVOT_TOL && !self.basis.contains(&j));
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((row, _)) => self.pivot(row, col),
            }
        }
        Err(Error::Numerical("simplex pivot limit reached".into()))
    }
}

/// Solves the LP. `e` is row-major with `rows` rows.
pub fn solve(e: &[Vec<f64>], r: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let rows = e.len();
    let n = c.len();
    if r.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, actual: r.len(), context: "lp rhs" });
    }
    for row in e {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: row.len(), context: "lp row" });
        }
    }
    let sign: Vec<f64> = r.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let cols = n + rows;
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..n {
            t[i * cols + j] = sign[i] * e[i][j];
        }
        t[i * cols + n + i] = 1.0;
    }
    let mut tab = Tableau {
        rows,
        cols,
        t,
        rhs: r.iter().zip(&sign).map(|(v, s)| v * s).collect(),
        basis: (n..n + rows).collect(),
    };

    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase1, cols)?;
    let infeasible: Vec<usize> = (0..rows)
        .filter(|&i| tab.basis[i] >= n && tab.rhs[i] > FEAS_TOL)
        .collect();
    if !infeasible.is_empty() {
        let mut z = vec![0.0; n];
        for (i, &j) in tab.basis.iter().enumerate() {
            if j < n {
                z[j] = tab.rhs[i];
            }
        }
        return Ok(LpOutcome::Infeasible { rows: infeasible, z });
    }
    // Pivot degenerate artificials out where a structural column allows it.
    for i in 0..rows {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > PIVOT_TOL && !tab.basis.contains(&j)) {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.resize(cols, 0.0);
    if !tab.optimize(&phase2, n)? {
        return Ok(LpOutcome::Unbounded);
    }

    // Basis matrix in the original (unsigned) system; artificial i is sign_i e_i.
    let column = |j: usize| -> Vec<f64> {
        if j < n {
            (0..rows).map(|i| e[i][j]).collect()
        } else {
            let mut v = vec![0.0; rows];
            v[j - n] = sign[j - n];
            v
        }
    };
    let bmat: Vec<Vec<f64>> = tab.basis.iter().map(|&j| column(j)).collect(); // columns
    let b_rows: Vec<Vec<f64>> = (0..rows).map(|i| bmat.iter().map(|col| col[i]).collect()).collect();
    let zb = solve_dense(&b_rows, r)?;
    let cb: Vec<f64> = tab.basis.iter().map(|&j| phase2[j]).collect();
    let duals = solve_dense(&bmat, &cb)?;

    let mut z = vec![0.0; n];
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            z[j] = if zb[i].abs() < 1e-13 { 0.0 } else { zb[i] };
        }
    }
    let objective = z.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal(LpSolution { z, objective, duals, basis: tab.basis }))
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-12 {
            return Err(Error::Numerical("singular basis matrix".into()));
        }
        m.swap(col, piv);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for j in col..=n {
                    let v = m[col][j];
                    m[i][j] -= f * v;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: LpOutcome) -> LpSolution {
        match o {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_lp_with_slacks() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let e = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let s = optimal(solve(&e, &[4.0, 6.0], &[-1.0, -1.0, 0.0, 0.0]).unwrap());
        assert!((s.z[0] - 1.6).abs() < 1e-12);
        assert!((s.z[1] - 1.2).abs() < 1e-12);
        assert!((s.objective + 2.8).abs() < 1e-12);
        let dual_obj = 4.0 * s.duals[0] + 6.0 * s.duals[1];
        assert!((dual_obj - s.objective).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_infeasible() {
        // x + s = -1 has no non-negative solution.
        let e = vec![vec![1.0, 1.0]];
        match solve(&e, &[-1.0], &[0.0, 0.0]).unwrap() {
            LpOutcome::Infeasible { rows, .. } => assert_eq!(rows, vec![0]),
            other => panic!("unexpected {other:?}"),
        }
        // -x + s = -2 -> x = 2 + s; min x gives x = 2
        let e = vec![vec![-1.0, 1.0]];
        let s = optimal(solve(&e, &[-2.0], &[1.0, 0.0]).unwrap());
        assert_eq!(s.z, vec![2.0, 0.0]);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        // x - y = 0, min -x
        let e = vec![vec![1.0, -1.0]];
        assert_eq!(solve(&e, &[0.0], &[-1.0, 0.0]).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_keep_artificial_basic() {
        // x + y = 1 twice
        let e = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let s = optimal(solve(&e, &[1.0, 1.0], &[2.0, 1.0]).unwrap());
        assert_eq!(s.z, vec![0.0, 1.0]);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}
