//! Column generation over the restricted master problem.
//!
//! With RMP duals `(mu, sigma)` the reduced cost of a binary point `x` is
//!
//! ```text
//! x^T Q x - sum_k mu_k x^T A_k x - sigma  =  x^T (Q - sum_k mu_k A_k) x - sigma
//! ```
//!
//! so pricing is the QUBO with coefficients `Q - sum_k mu_k A_k` and offset
//! `-sigma`. Its minimum energy is the most negative reduced cost; a negative
//! value yields a new column, otherwise the master optimum over the pool is
//! also optimal over every binary point.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{BinarySolution, ProblemInstance, UpperTriangular};
use crate::qubo::{Qubo, QuboSolution, SaConfig, EXACT_LIMIT};
use crate::rmp::{solve_rmp, Column, ColumnPool, RmpSolution};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingBackend {
    Exact,
    Sa,
}

impl std::str::FromStr for PricingBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "sa" => Ok(Self::Sa),
            other => Err(Error::InvalidConfig(format!("unknown pricing backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgConfig {
    pub pricing_backend: PricingBackend,
    pub rc_tolerance: f64,
    pub max_iterations: usize,
    pub sa_config: SaConfig,
    pub duplicate_retries: usize,
    pub exact_limit: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            pricing_backend: PricingBackend::Exact,
            rc_tolerance: 1e-9,
            max_iterations: 200,
            sa_config: SaConfig::default(),
            duplicate_retries: 3,
            exact_limit: EXACT_LIMIT,
        }
    }
}

impl CgConfig {
    pub fn with_backend(backend: PricingBackend) -> Self {
        Self {
            pricing_backend: backend,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rc_tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "rc_tolerance and max_iterations must be positive".into(),
            ));
        }
        if self.pricing_backend == PricingBackend::Sa {
            self.sa_config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    DuplicateStall,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::MaxIter => "max_iter",
            Self::DuplicateStall => "duplicate_stall",
        })
    }
}

/// One pricing round.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub rmp_obj: f64,
    pub pool_size: usize,
    /// Minimum pricing energy found, i.e. the candidate's reduced cost.
    pub pricing_obj: f64,
    pub candidate: BinarySolution,
    pub added: bool,
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub pool: ColumnPool,
    pub lambda: Vec<f64>,
    pub relax_obj: f64,
    pub mu: Vec<f64>,
    pub sigma: f64,
    /// `X = sum_p lambda_p x^p (x^p)^T`
    pub x_matrix: Vec<Vec<f64>>,
    /// Number of pricing rounds.
    pub iterations: usize,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
}

impl CgResult {
    pub fn columns_added(&self) -> usize {
        self.history.iter().filter(|h| h.added).count()
    }
}

/// Pricing QUBO `Q - sum_k mu_k A_k` with offset `-sigma`.
pub fn pricing_qubo(inst: &ProblemInstance, mu: &[f64], sigma: f64) -> Result<Qubo> {
    if mu.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            actual: mu.len(),
            context: "dual vector",
        });
    }
    let n = inst.n();
    let mut coeffs = UpperTriangular::zeros(n);
    for (i, j, q) in inst.objective_matrix().entries() {
        let shift: f64 = inst
            .constraint_matrices()
            .iter()
            .zip(mu)
            .map(|(ak, &mk)| mk * ak.get(i, j))
            .sum();
        coeffs.set(i, j, q - shift);
    }
    Ok(Qubo::new(coeffs, -sigma))
}

/// `X[i][j] = sum_p lambda_p x_i^p x_j^p`.
pub fn assemble_x(pool: &ColumnPool, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    if pool.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: pool.len(),
            actual: lambda.len(),
            context: "column weights",
        });
    }
    let n = pool.columns().first().map_or(0, |c| c.x.len());
    let mut x = vec![vec![0.0; n]; n];
    for (col, &w) in pool.columns().iter().zip(lambda) {
        if w == 0.0 {
            continue;
        }
        let bits = col.x.bits();
        for i in (0..n).filter(|&i| bits[i] == 1) {
            for j in (i..n).filter(|&j| bits[j] == 1) {
                x[i][j] += w;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            x[i][j] = x[j][i];
        }
    }
    Ok(x)
}

fn price(qubo: &Qubo, pool: &ColumnPool, cfg: &CgConfig, round: usize, retry: usize) -> Result<Option<QuboSolution>> {
    match cfg.pricing_backend {
        PricingBackend::Exact => match qubo.solve_exact_with_limit(pool.members(), cfg.exact_limit) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Exhausted { .. }) => Ok(None),
            Err(e) => Err(e),
        },
        PricingBackend::Sa => {
            let sa = SaConfig {
                seed: seed::derive_all(cfg.sa_config.seed, &[round as u64, retry as u64]),
                ..cfg.sa_config
            };
            qubo.solve_sa(&sa).map(Some)
        }
    }
}

pub fn run_cg(inst: &ProblemInstance, initial: &[BinarySolution], cfg: &CgConfig) -> Result<CgResult> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::Contract("column generation needs at least one initial column".into()));
    }
    let mut pool = ColumnPool::new();
    for x in initial {
        pool.insert(Column::build(inst, x.clone())?);
    }
    let b = inst.bounds();
    let mut rmp: RmpSolution = solve_rmp(&pool, b).map_err(|e| match e {
        Error::RmpInfeasible { rows } => Error::InfeasibleInitialColumns { rows },
        other => other,
    })?;

    let mut history = Vec::new();
    let termination = loop {
        if history.len() >= cfg.max_iterations {
            break Termination::MaxIter;
        }
        let qubo = pricing_qubo(inst, &rmp.mu, rmp.sigma)?;
        let round = history.len();

        let mut outcome = None;
        let mut stalled = false;
        for retry in 0..=cfg.duplicate_retries {
            let Some(cand) = price(&qubo, &pool, cfg, round, retry)? else {
                break;
            };
            if cand.energy >= -cfg.rc_tolerance || !pool.contains(&cand.x) {
                outcome = Some(cand);
                break;
            }
            // Improving but already pooled: only the annealer can land here.
            if retry == cfg.duplicate_retries || cfg.pricing_backend == PricingBackend::Exact {
                outcome = Some(cand);
                stalled = true;
                break;
            }
        }

        let Some(cand) = outcome else {
            // Every binary point is already a column.
            break Termination::Converged;
        };
        let improving = cand.energy < -cfg.rc_tolerance && !stalled;
        history.push(IterationRecord {
            rmp_obj: rmp.primal_obj,
            pool_size: pool.len(),
            pricing_obj: cand.energy,
            candidate: cand.x.clone(),
            added: improving,
        });
        if stalled {
            break Termination::DuplicateStall;
        }
        if !improving {
            break Termination::Converged;
        }
        pool.insert(Column::build(inst, cand.x)?);
        rmp = solve_rmp(&pool, b)?;
    };

    let x_matrix = assemble_x(&pool, &rmp.lambda)?;
    Ok(CgResult {
        lambda: rmp.lambda,
        relax_obj: rmp.primal_obj,
        mu: rmp.mu,
        sigma: rmp.sigma,
        x_matrix,
        iterations: history.len(),
        termination,
        history,
        pool,
    })
}
