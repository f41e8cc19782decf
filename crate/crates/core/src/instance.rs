//! Problem representation for inequality-constrained 0-1 quadratic programs:
//!
//! ```text
//! min   sum_{i<=j} Q[i][j] x_i x_j
//! s.t.  sum_{i<=j} A_k[i][j] x_i x_j <= b_k   for k = 1..m
//!       x in {0,1}^n
//! ```
//!
//! Coefficients live in a packed upper-triangular layout. All arithmetic is
//! done in `f64`; the benchmark family has small integer coefficients, for
//! which every partial sum is an exactly representable integer, so objective
//! values, activities and flip deltas compare exactly in tests.

use std::collections::HashSet;
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Upper-triangular `n x n` matrix stored row by row, `(i, j)` with `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    n: usize,
    data: Vec<f64>,
}

impl UpperTriangular {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Builds from a dense row-major matrix, ignoring the strict lower triangle.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                    context: "dense matrix row",
                });
            }
            for j in i..n {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    /// Entry `(i, j)` for `i <= j`, zero-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.offset(i, j)]
    }

    /// Entry of the symmetric coupling between `i` and `j` regardless of order.
    #[inline]
    pub fn get_sym(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    /// Iterates `(i, j, value)` over the upper triangle in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j, self.get(i, j))))
    }

    /// `Q[i][i] + sum_{j<i} Q[j][i] x_j + sum_{j>i} Q[i][j] x_j`: the change of
    /// the quadratic form when `x_i` goes from 0 to 1 with the rest held fixed.
    #[inline]
    pub fn local_field(&self, x: &[u8], i: usize) -> f64 {
        let mut h = self.get(i, i);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0 && j != i {
                h += self.get_sym(i, j);
            }
        }
        h
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// Evaluates `sum_{i<=j} M[i][j] x_i x_j`.
pub fn eval_quadratic_form(m: &UpperTriangular, x: &BinarySolution) -> Result<f64> {
    if m.size() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: m.size(),
            actual: x.len(),
            context: "quadratic form",
        });
    }
    Ok(quad_form(m, x.bits()))
}

pub(crate) fn quad_form(m: &UpperTriangular, x: &[u8]) -> f64 {
    let n = m.size();
    let mut total = 0.0;
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        for j in i..n {
            if x[j] != 0 {
                total += m.get(i, j);
            }
        }
    }
    total
}

/// A 0-1 vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct BinarySolution(Vec<u8>);

impl BinarySolution {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidInstance(format!(
                "bit {} has value {}, expected 0 or 1",
                pos + 1,
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// `(1, 0, ..., 0)`, the trivial starting column for benchmark instances.
    pub fn unit_first(n: usize) -> Self {
        let mut bits = vec![0; n];
        if n > 0 {
            bits[0] = 1;
        }
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut y = self.clone();
        y.flip(i);
        y
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| b ^ 1).collect())
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }
}

impl fmt::Display for BinarySolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Constraint status of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `v_k = max(0, lhs_k - b_k)`
    pub violations: Vec<f64>,
    /// `r_k = b_k - lhs_k`
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    n: usize,
    q: UpperTriangular,
    a: Vec<UpperTriangular>,
    b: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(q: UpperTriangular, a: Vec<UpperTriangular>, b: Vec<f64>) -> Result<Self> {
        let n = q.size();
        if n == 0 {
            return Err(Error::InvalidInstance("n must be positive".into()));
        }
        if a.len() != b.len() {
            return Err(Error::InvalidInstance(format!(
                "{} constraint matrices but {} bounds",
                a.len(),
                b.len()
            )));
        }
        for (k, ak) in a.iter().enumerate() {
            if ak.size() != n {
                return Err(Error::InvalidInstance(format!(
                    "constraint matrix {} has size {}, expected {}",
                    k + 1,
                    ak.size(),
                    n
                )));
            }
        }
        let mut coeffs = q.data.iter().chain(a.iter().flat_map(|m| m.data.iter())).chain(b.iter());
        if coeffs.any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite coefficient".into()));
        }
        Ok(Self { n, q, a, b })
    }

    /// Random benchmark instance: every upper-triangular entry of `Q` and of
    /// each `A_k` is +1 or -1 and every bound is 1.
    ///
    /// Entries are drawn from SplitMix64 seeded with `seed`, one 64-bit output
    /// per coefficient, in the order `Q`, `A_1`, ..., `A_m`, each row-major over
    /// `i <= j`. The coefficient is `-1` when the top bit of the output is set
    /// and `+1` otherwise.
    pub fn generate_random(n: usize, m: usize, seed: u64) -> Self {
        assert!(n >= 1, "generate_random requires n >= 1");
        let mut rng = seed::rng(seed);
        let draw = |rng: &mut rand_xoshiro::SplitMix64| {
            let mut mat = UpperTriangular::zeros(n);
            for v in mat.data.iter_mut() {
                *v = if rng.next_u64() >> 63 == 1 { -1.0 } else { 1.0 };
            }
            mat
        };
        let q = draw(&mut rng);
        let a = (0..m).map(|_| draw(&mut rng)).collect();
        Self {
            n,
            q,
            a,
            b: vec![1.0; m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn objective_matrix(&self) -> &UpperTriangular {
        &self.q
    }

    pub fn constraint_matrices(&self) -> &[UpperTriangular] {
        &self.a
    }

    pub fn bounds(&self) -> &[f64] {
        &self.b
    }

    fn check_len(&self, x: &BinarySolution) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
                context: "solution length",
            });
        }
        Ok(())
    }

    pub fn objective(&self, x: &BinarySolution) -> Result<f64> {
        eval_quadratic_form(&self.q, x)
    }

    /// Left-hand sides `x^T A_k x` for every constraint.
    pub fn activities(&self, x: &BinarySolution) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self.a.iter().map(|ak| quad_form(ak, x.bits())).collect())
    }

    pub fn feasibility_report(&self, x: &BinarySolution) -> Result<FeasibilityReport> {
        let lhs = self.activities(x)?;
        let margins: Vec<f64> = lhs.iter().zip(&self.b).map(|(l, b)| b - l).collect();
        let violations: Vec<f64> = margins.iter().map(|r| (-r).max(0.0)).collect();
        Ok(FeasibilityReport {
            feasible: violations.iter().all(|&v| v == 0.0),
            violations,
            margins,
        })
    }

    pub fn is_feasible(&self, x: &BinarySolution) -> Result<bool> {
        self.check_len(x)?;
        Ok(self.is_feasible_bits(x.bits()))
    }

    pub(crate) fn is_feasible_bits(&self, x: &[u8]) -> bool {
        self.a
            .iter()
            .zip(&self.b)
            .all(|(ak, &bk)| quad_form(ak, x) <= bk)
    }

    /// True when every coefficient and bound is an integer.
    pub fn is_integral(&self) -> bool {
        let integral = |v: &f64| v.fract() == 0.0;
        self.q.data.iter().all(integral)
            && self.a.iter().all(|m| m.data.iter().all(integral))
            && self.b.iter().all(integral)
    }

    /// Serializes to the JSON instance format. Nonzero triples only, 1-based,
    /// sorted by `(i, j)`.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n,
            m: self.m(),
            b: self.b.clone(),
            q: triples(&self.q),
            a: self.a.iter().map(triples).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("instance serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse {
                position: "line 1 column 1".into(),
                message: "empty instance file".into(),
            });
        }
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        file.into_instance()
    }
}

fn triples(m: &UpperTriangular) -> Vec<(usize, usize, f64)> {
    m.entries()
        .filter(|&(_, _, v)| v != 0.0)
        .map(|(i, j, v)| (i + 1, j + 1, v))
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    m: usize,
    b: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<(usize, usize, f64)>,
    #[serde(rename = "A")]
    a: Vec<Vec<(usize, usize, f64)>>,
}

impl InstanceFile {
    fn into_instance(self) -> Result<ProblemInstance> {
        let invalid = |position: String, message: String| Error::Parse { position, message };
        if self.n == 0 {
            return Err(invalid("field n".into(), "n must be positive".into()));
        }
        if self.b.len() != self.m {
            return Err(invalid(
                "field b".into(),
                format!("length {} does not match m = {}", self.b.len(), self.m),
            ));
        }
        if self.a.len() != self.m {
            return Err(invalid(
                "field A".into(),
                format!("{} matrices but m = {}", self.a.len(), self.m),
            ));
        }
        let fill = |name: String, items: &[(usize, usize, f64)]| -> Result<UpperTriangular> {
            let mut mat = UpperTriangular::zeros(self.n);
            let mut seen = HashSet::new();
            for (pos, &(i, j, v)) in items.iter().enumerate() {
                let at = format!("field {name}, triple {pos}");
                if i < 1 || j < 1 || i > self.n || j > self.n {
                    return Err(invalid(at, format!("index ({i}, {j}) outside 1..={}", self.n)));
                }
                if i > j {
                    return Err(invalid(at, format!("index ({i}, {j}) below the diagonal")));
                }
                if !v.is_finite() {
                    return Err(invalid(at, "non-finite value".into()));
                }
                if !seen.insert((i, j)) {
                    return Err(invalid(at, format!("duplicate entry ({i}, {j})")));
                }
                mat.set(i - 1, j - 1, v);
            }
            Ok(mat)
        };
        let q = fill("Q".into(), &self.q)?;
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(k, items)| fill(format!("A[{k}]"), items))
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("field b, entry {k}"), "non-finite value".into()));
        }
        ProblemInstance::new(q, a, self.b)
    }
}
