//! Restricted master problem over a pool of extreme points:
//!
//! ```text
//! min  sum_p c_p l_p
//! s.t. sum_p a_kp l_p <= b_k     (duals mu_k <= 0)
//!      sum_p l_p       = 1       (dual sigma)
//!      l >= 0
//! ```
//!
//! The reduced cost of a column is `c_p - sum_k mu_k a_kp - sigma`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::instance::{BinarySolution, ProblemInstance};
use crate::simplex::{self, LpOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub x: BinarySolution,
    pub cost: f64,
    pub activity: Vec<f64>,
}

impl Column {
    pub fn build(inst: &ProblemInstance, x: BinarySolution) -> Result<Self> {
        let cost = inst.objective(&x)?;
        let activity = inst.activities(&x)?;
        Ok(Self { x, cost, activity })
    }
}

/// Insertion-ordered set of columns, unique by bit string.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    columns: Vec<Column>,
    members: HashSet<BinarySolution>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the column unless its bit string is already pooled.
    pub fn insert(&mut self, col: Column) -> bool {
        if self.members.contains(&col.x) {
            return false;
        }
        self.members.insert(col.x.clone());
        self.columns.push(col);
        true
    }

    pub fn contains(&self, x: &BinarySolution) -> bool {
        self.members.contains(x)
    }

    pub fn members(&self) -> &HashSet<BinarySolution> {
        &self.members
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmpSolution {
    pub lambda: Vec<f64>,
    pub primal_obj: f64,
    pub mu: Vec<f64>,
    pub sigma: f64,
}

impl RmpSolution {
    pub fn dual_obj(&self, b: &[f64]) -> f64 {
        b.iter().zip(&self.mu).map(|(b, m)| b * m).sum::<f64>() + self.sigma
    }

    pub fn reduced_cost(&self, col: &Column) -> f64 {
        reduced_cost(col, &self.mu, self.sigma)
    }
}

/// `cost - sum_k mu_k activity_k - sigma`.
pub fn reduced_cost(col: &Column, mu: &[f64], sigma: f64) -> f64 {
    col.cost - col.activity.iter().zip(mu).map(|(a, m)| a * m).sum::<f64>() - sigma
}

pub fn solve_rmp(pool: &ColumnPool, b: &[f64]) -> Result<RmpSolution> {
    if pool.is_empty() {
        return Err(Error::Contract("restricted master problem needs at least one column".into()));
    }
    let m = b.len();
    let p = pool.len();
    for col in pool.columns() {
        if col.activity.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: col.activity.len(),
                context: "column activity",
            });
        }
    }
    // Variables: lambda_1..lambda_p, then one slack per inequality row.
    let mut e = vec![vec![0.0; p + m]; m + 1];
    for (k, row) in e.iter_mut().take(m).enumerate() {
        for (j, col) in pool.columns().iter().enumerate() {
            row[j] = col.activity[k];
        }
        row[p + k] = 1.0;
    }
    e[m][..p].iter_mut().for_each(|v| *v = 1.0);
    let mut rhs = b.to_vec();
    rhs.push(1.0);
    let mut cost: Vec<f64> = pool.columns().iter().map(|c| c.cost).collect();
    cost.resize(p + m, 0.0);

    match simplex::solve(&e, &rhs, &cost)? {
        LpOutcome::Optimal(sol) => {
            let lambda = sol.z[..p].to_vec();
            let primal_obj = lambda.iter().zip(&cost).map(|(l, c)| l * c).sum();
            Ok(RmpSolution {
                lambda,
                primal_obj,
                mu: sol.duals[..m].to_vec(),
                sigma: sol.duals[m],
            })
        }
        LpOutcome::Infeasible { z, .. } => Err(Error::RmpInfeasible {
            rows: violated_rows(pool, b, &z[..p]),
        }),
        LpOutcome::Unbounded => Err(Error::Numerical(
            "master problem reported unbounded over a bounded feasible set".into(),
        )),
    }
}

/// 1-based inequality rows violated by the phase-one mixture of columns,
/// renormalized onto the simplex.
fn violated_rows(pool: &ColumnPool, b: &[f64], weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let p = weights.len() as f64;
    let w: Vec<f64> = if total > 1e-12 {
        weights.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / p; weights.len()]
    };
    (0..b.len())
        .filter(|&k| {
            let lhs: f64 = pool.columns().iter().zip(&w).map(|(c, wp)| c.activity[k] * wp).sum();
            lhs > b[k] + 1e-9
        })
        .map(|k| k + 1)
        .collect()
}
