//! Turns a column-generation relaxation into a feasible 0-1 solution.
//!
//! The rounded point is first repaired by greedy single flips that reduce
//! constraint violation, then improved by greedy single flips that lower the
//! objective without leaving the feasible set. Both phases rank variables by
//! an efficiency score that mixes the normalized objective change with the
//! normalized constraint changes, weighted per constraint.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{BinarySolution, ProblemInstance};

/// Denominators below this magnitude zero out their normalized term.
pub const NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PpConfig {
    pub alpha_f: f64,
    pub alpha_l: f64,
    pub max_flips: usize,
}

impl Default for PpConfig {
    fn default() -> Self {
        Self {
            alpha_f: 0.1,
            alpha_l: 0.9,
            max_flips: 1000,
        }
    }
}

impl PpConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |a: f64| (0.0..=1.0).contains(&a);
        if !unit(self.alpha_f) || !unit(self.alpha_l) {
            return Err(Error::InvalidConfig("alpha_f and alpha_l must lie in [0, 1]".into()));
        }
        if self.max_flips == 0 {
            return Err(Error::InvalidConfig("max_flips must be positive".into()));
        }
        Ok(())
    }
}

/// Single-flip changes of the objective (`p`) and of every constraint
/// left-hand side (`w[i][k]`), with the flip direction `f` of each bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipDeltas {
    pub p: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub f: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PpOutcome {
    Feasible { x: BinarySolution, objective: f64 },
    NoFeasibleSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpResult {
    pub outcome: PpOutcome,
    pub restoration_flips: usize,
    pub optimization_flips: usize,
}

impl PpResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, PpOutcome::Feasible { .. })
    }

    pub fn objective(&self) -> Option<f64> {
        match &self.outcome {
            PpOutcome::Feasible { objective, .. } => Some(*objective),
            PpOutcome::NoFeasibleSolution => None,
        }
    }

    pub fn solution(&self) -> Option<&BinarySolution> {
        match &self.outcome {
            PpOutcome::Feasible { x, .. } => Some(x),
            PpOutcome::NoFeasibleSolution => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RestorationOutcome {
    Feasible(BinarySolution),
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restoration {
    pub outcome: RestorationOutcome,
    pub flips: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimum {
    pub x: BinarySolution,
    pub flips: usize,
    /// Objective after each accepted flip, starting with the input objective.
    pub trajectory: Vec<f64>,
}

/// Bit `i` is 1 iff `sqrt(X[i][i]) > 0.5`, diagonal clamped to `[0, 1]`.
pub fn round_solution(x_matrix: &[Vec<f64>]) -> BinarySolution {
    let bits = x_matrix
        .iter()
        .enumerate()
        .map(|(i, row)| (row[i].clamp(0.0, 1.0).sqrt() > 0.5) as u8)
        .collect();
    BinarySolution::from_bits_unchecked(bits)
}

pub fn flip_deltas(inst: &ProblemInstance, x: &BinarySolution) -> Result<FlipDeltas> {
    if x.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            expected: inst.n(),
            actual: x.len(),
            context: "solution length",
        });
    }
    let bits = x.bits();
    let f: Vec<i8> = bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect();
    let q = inst.objective_matrix();
    let p = (0..inst.n())
        .map(|i| f[i] as f64 * q.local_field(bits, i))
        .collect();
    let w = (0..inst.n())
        .map(|i| {
            inst.constraint_matrices()
                .iter()
                .map(|ak| f[i] as f64 * ak.local_field(bits, i))
                .collect()
        })
        .collect();
    Ok(FlipDeltas { p, w, f })
}

/// `v / max_i v_i` with `v_i = -d_i`; zero when the denominator is degenerate.
fn normalized_neg(d: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let denom = d.clone().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    if !denom.is_finite() || denom.abs() < NORM_GUARD {
        return d.map(|_| 0.0).collect();
    }
    d.map(|v| -v / denom).collect()
}

/// `e_i = alpha * pbar_i + (1 - alpha) * sum_k beta_k * wbar_ik`.
///
/// The normalizations follow the literal `(-d_i) / max_i(-d_i)`. When every
/// flip worsens a quantity the maximum is negative and the ordering of that
/// term reverses; this is left as is.
pub fn efficiency(d: &FlipDeltas, alpha: f64, beta: &[f64]) -> Vec<f64> {
    let n = d.p.len();
    let pbar = normalized_neg(d.p.iter().copied());
    let mut e: Vec<f64> = pbar.iter().map(|v| alpha * v).collect();
    for (k, &bk) in beta.iter().enumerate() {
        let wbar = normalized_neg((0..n).map(|i| d.w[i][k]));
        for (ei, wb) in e.iter_mut().zip(wbar) {
            *ei += (1.0 - alpha) * bk * wb;
        }
    }
    e
}

/// `beta_k = v_k / sum_k v_k`.
pub fn beta_feasibility(violations: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = violations.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Contract(
            "feasibility weights need at least one violated constraint".into(),
        ));
    }
    Ok(violations.iter().map(|v| v / total).collect())
}

/// `beta_k = -r_k / sum_k r_k`, or `-1/m` each when every constraint is tight.
pub fn beta_local(margins: &[f64]) -> Vec<f64> {
    let m = margins.len();
    let total: f64 = margins.iter().sum();
    if total > NORM_GUARD {
        margins.iter().map(|r| -r / total).collect()
    } else {
        vec![-1.0 / m as f64; m]
    }
}

/// Indices sorted by descending score, lowest index first among ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

pub fn feasibility_restoration(
    inst: &ProblemInstance,
    x: &BinarySolution,
    alpha_f: f64,
    max_flips: usize,
) -> Result<Restoration> {
    let mut x = x.clone();
    let mut visited: HashSet<BinarySolution> = HashSet::new();
    visited.insert(x.clone());
    let mut flips = 0;
    loop {
        let report = inst.feasibility_report(&x)?;
        if report.feasible {
            return Ok(Restoration { outcome: RestorationOutcome::Feasible(x), flips });
        }
        if flips >= max_flips {
            return Ok(Restoration { outcome: RestorationOutcome::Failed, flips });
        }
        let deltas = flip_deltas(inst, &x)?;
        let beta = beta_feasibility(&report.violations)?;
        let e = efficiency(&deltas, alpha_f, &beta);
        let next = ranked(&e)
            .into_iter()
            .map(|i| x.flipped(i))
            .find(|y| !visited.contains(y));
        match next {
            Some(y) => {
                visited.insert(y.clone());
                x = y;
                flips += 1;
            }
            None => return Ok(Restoration { outcome: RestorationOutcome::Failed, flips }),
        }
    }
}

pub fn local_optimization(inst: &ProblemInstance, x: &BinarySolution, alpha_l: f64) -> Result<LocalOptimum> {
    if !inst.is_feasible(x)? {
        return Err(Error::Contract("local optimization needs a feasible start".into()));
    }
    let mut x = x.clone();
    let mut trajectory = vec![inst.objective(&x)?];
    loop {
        let deltas = flip_deltas(inst, &x)?;
        let report = inst.feasibility_report(&x)?;
        let beta = beta_local(&report.margins);
        let e = efficiency(&deltas, alpha_l, &beta);
        let accepted = ranked(&e)
            .into_iter()
            .filter(|&i| deltas.p[i] < 0.0)
            .find(|&i| {
                x.flip(i);
                let ok = inst.is_feasible_bits(x.bits());
                x.flip(i);
                ok
            });
        match accepted {
            Some(i) => {
                x.flip(i);
                trajectory.push(inst.objective(&x)?);
            }
            None => break,
        }
    }
    Ok(LocalOptimum { flips: trajectory.len() - 1, x, trajectory })
}

pub fn postprocess(inst: &ProblemInstance, x_init: &BinarySolution, cfg: &PpConfig) -> Result<PpResult> {
    cfg.validate()?;
    let restored = feasibility_restoration(inst, x_init, cfg.alpha_f, cfg.max_flips)?;
    match restored.outcome {
        RestorationOutcome::Feasible(xf) => {
            let local = local_optimization(inst, &xf, cfg.alpha_l)?;
            let objective = inst.objective(&local.x)?;
            Ok(PpResult {
                outcome: PpOutcome::Feasible { x: local.x, objective },
                restoration_flips: restored.flips,
                optimization_flips: local.flips,
            })
        }
        RestorationOutcome::Failed => Ok(PpResult {
            outcome: PpOutcome::NoFeasibleSolution,
            restoration_flips: restored.flips,
            optimization_flips: 0,
        }),
    }
}
