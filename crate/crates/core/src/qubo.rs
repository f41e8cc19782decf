//! QUBO model and the two pricing backends.
//!
//! `solve_exact` enumerates the cube in Gray-code order, keeping the local
//! field of every variable so each step costs one energy update plus an
//! O(n) field refresh. `solve_sa` is single-flip Metropolis annealing with a
//! geometric inverse-temperature schedule.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{quad_form, BinarySolution, UpperTriangular};
use crate::seed;

/// Largest size `solve_exact` accepts by default.
pub const EXACT_LIMIT: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    pub coeffs: UpperTriangular,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboSolution {
    pub x: BinarySolution,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaConfig {
    pub num_reads: usize,
    pub sweeps_per_read: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            num_reads: 20,
            sweeps_per_read: 1000,
            beta_initial: 0.1,
            beta_final: 10.0,
            seed: 0,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 || self.sweeps_per_read == 0 {
            return Err(Error::InvalidConfig(
                "num_reads and sweeps_per_read must be positive".into(),
            ));
        }
        let finite_pos = |b: f64| b.is_finite() && b > 0.0;
        if !finite_pos(self.beta_initial) || !finite_pos(self.beta_final) {
            return Err(Error::InvalidConfig("inverse temperatures must be positive".into()));
        }
        if self.beta_final <= self.beta_initial {
            return Err(Error::InvalidConfig(format!(
                "beta_final ({}) must exceed beta_initial ({})",
                self.beta_final, self.beta_initial
            )));
        }
        Ok(())
    }

    /// Inverse temperature of every sweep, geometric from initial to final.
    pub fn schedule(&self) -> Vec<f64> {
        let s = self.sweeps_per_read;
        if s == 1 {
            return vec![self.beta_initial];
        }
        let ratio = (self.beta_final / self.beta_initial).powf(1.0 / (s - 1) as f64);
        (0..s)
            .map(|k| self.beta_initial * ratio.powi(k as i32))
            .collect()
    }
}

impl Qubo {
    pub fn new(coeffs: UpperTriangular, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn n(&self) -> usize {
        self.coeffs.size()
    }

    pub fn energy(&self, x: &BinarySolution) -> Result<f64> {
        self.check(x)?;
        Ok(quad_form(&self.coeffs, x.bits()) + self.offset)
    }

    fn check(&self, x: &BinarySolution) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.len(),
                context: "qubo state",
            });
        }
        Ok(())
    }

    /// `energy(flip(x, i)) - energy(x)`, zero-based `i`, in O(n).
    pub fn delta_energy(&self, x: &BinarySolution, i: usize) -> Result<f64> {
        self.check(x)?;
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, size: self.n() });
        }
        let h = self.coeffs.local_field(x.bits(), i);
        Ok(if x.get(i) == 0 { h } else { -h })
    }

    /// Dense symmetric off-diagonal couplings and the diagonal.
    fn dense(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut sym = vec![0.0; n * n];
        let mut diag = vec![0.0; n];
        for (i, j, v) in self.coeffs.entries() {
            if i == j {
                diag[i] = v;
            } else {
                sym[i * n + j] = v;
                sym[j * n + i] = v;
            }
        }
        (sym, diag)
    }

    /// Minimum-energy state outside `exclude`, ties broken towards the
    /// lexicographically smallest bit string.
    pub fn solve_exact(&self, exclude: &HashSet<BinarySolution>) -> Result<QuboSolution> {
        self.solve_exact_with_limit(exclude, EXACT_LIMIT)
    }

    pub fn solve_exact_with_limit(
        &self,
        exclude: &HashSet<BinarySolution>,
        limit: usize,
    ) -> Result<QuboSolution> {
        let n = self.n();
        if n > limit || n >= 64 {
            return Err(Error::Capacity { n, limit });
        }
        let (sym, diag) = self.dense();
        let mut x = vec![0u8; n];
        let mut field = diag.clone();
        let mut energy = self.offset;
        // Variable i sits at bit n-1-i so integer order is lexicographic order.
        let mut mask: u64 = 0;

        let is_excluded = |x: &[u8]| -> bool {
            !exclude.is_empty() && exclude.contains(&BinarySolution::from_bits_unchecked(x.to_vec()))
        };

        let mut best: Option<(f64, u64, Vec<u8>)> = None;
        let consider = |energy: f64, mask: u64, x: &[u8], best: &mut Option<(f64, u64, Vec<u8>)>| {
            let better = match best {
                None => true,
                Some((e, m, _)) => energy < *e || (energy == *e && mask < *m),
            };
            if better && !is_excluded(x) {
                *best = Some((energy, mask, x.to_vec()));
            }
        };

        consider(energy, mask, &x, &mut best);
        let total: u64 = 1u64 << n;
        for step in 1..total {
            let bit = step.trailing_zeros() as usize;
            let i = n - 1 - bit;
            let row = &sym[i * n..(i + 1) * n];
            if x[i] == 0 {
                energy += field[i];
                x[i] = 1;
                for (f, &s) in field.iter_mut().zip(row) {
                    *f += s;
                }
            } else {
                energy -= field[i];
                x[i] = 0;
                for (f, &s) in field.iter_mut().zip(row) {
                    *f -= s;
                }
            }
            mask ^= 1u64 << bit;
            consider(energy, mask, &x, &mut best);
        }

        let (_, _, bits) = best.ok_or(Error::Exhausted { n })?;
        let x = BinarySolution::from_bits_unchecked(bits);
        let energy = quad_form(&self.coeffs, x.bits()) + self.offset;
        Ok(QuboSolution { x, energy })
    }

    /// Best state over `num_reads` independent annealing chains.
    pub fn solve_sa(&self, cfg: &SaConfig) -> Result<QuboSolution> {
        cfg.validate()?;
        let schedule = cfg.schedule();
        let (sym, diag) = self.dense();
        let reads: Vec<(f64, Vec<u8>)> = (0..cfg.num_reads)
            .into_par_iter()
            .map(|r| anneal(&sym, &diag, &schedule, seed::derive(cfg.seed, r as u64)))
            .collect();

        let mut best: Option<(f64, Vec<u8>)> = None;
        for (_, bits) in reads {
            // Re-evaluate so chains are compared on exact energies.
            let e = quad_form(&self.coeffs, &bits);
            let replace = match &best {
                None => true,
                Some((be, bb)) => e < *be || (e == *be && bits < *bb),
            };
            if replace {
                best = Some((e, bits));
            }
        }
        let (e, bits) = best.expect("num_reads >= 1");
        Ok(QuboSolution {
            x: BinarySolution::from_bits_unchecked(bits),
            energy: e + self.offset,
        })
    }
}

/// One Metropolis chain; returns the lowest (energy without offset, state) seen.
fn anneal(sym: &[f64], diag: &[f64], schedule: &[f64], seed: u64) -> (f64, Vec<u8>) {
    let n = diag.len();
    let mut rng = seed::rng(seed);
    let mut x: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
    let mut field = diag.to_vec();
    let mut energy = 0.0;
    for i in 0..n {
        if x[i] == 1 {
            energy += field[i];
            for j in 0..n {
                field[j] += sym[i * n + j];
            }
        }
    }
    let mut best_energy = energy;
    let mut best_x = x.clone();

    for &beta in schedule {
        for i in 0..n {
            let delta = if x[i] == 0 { field[i] } else { -field[i] };
            let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
            if !accept {
                continue;
            }
            energy += delta;
            let sign = if x[i] == 0 { 1.0 } else { -1.0 };
            x[i] ^= 1;
            let row = &sym[i * n..(i + 1) * n];
            for (f, &s) in field.iter_mut().zip(row) {
                *f += sign * s;
            }
            if energy < best_energy {
                best_energy = energy;
                best_x.copy_from_slice(&x);
            }
        }
    }
    (best_energy, best_x)
}
