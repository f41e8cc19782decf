//! Exact oracle, baselines, metrics and the experiment sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::colgen::{run_cg, CgConfig, PricingBackend, Termination};
use crate::error::{Error, Result};
use crate::instance::{BinarySolution, ProblemInstance};
use crate::postprocess::{postprocess, round_solution, PpConfig, PpResult};
use crate::seed;

/// Largest `n` the constrained enumeration oracle accepts by default.
pub const ORACLE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub feasible_exists: bool,
    pub e_star: Option<f64>,
    /// Lexicographically smallest optimum (first bit most significant).
    pub x_star: Option<BinarySolution>,
    /// Number of feasible points attaining `e_star`.
    pub num_optima: u64,
}

pub fn solve_exact_original(inst: &ProblemInstance) -> Result<ExactResult> {
    solve_exact_original_with_limit(inst, ORACLE_LIMIT)
}

/// Gray-code walk over `{0,1}^n` carrying the objective and every
/// constraint left-hand side, each updated through its local fields.
pub fn solve_exact_original_with_limit(inst: &ProblemInstance, limit: usize) -> Result<ExactResult> {
    let n = inst.n();
    if n > limit || n >= 64 {
        return Err(Error::Capacity { n, limit });
    }
    let m = inst.m();
    // Form 0 is the objective, forms 1..=m the constraints.
    let forms: Vec<_> = std::iter::once(inst.objective_matrix())
        .chain(inst.constraint_matrices())
        .collect();
    let mut sym = vec![0.0; (m + 1) * n * n];
    let mut field = vec![0.0; (m + 1) * n];
    for (f, mat) in forms.iter().enumerate() {
        for (i, j, v) in mat.entries() {
            if i == j {
                field[f * n + i] = v;
            } else {
                sym[(f * n + i) * n + j] = v;
                sym[(f * n + j) * n + i] = v;
            }
        }
    }
    let b = inst.bounds();
    let mut value = vec![0.0; m + 1];
    let mut x = vec![0u8; n];
    let mut mask: u64 = 0;

    let mut best: Option<(f64, u64)> = None;
    let mut count = 0u64;
    let mut consider = |value: &[f64], mask: u64| {
        if value[1..].iter().zip(b).any(|(l, bk)| l > bk) {
            return;
        }
        match best {
            Some((e, _)) if value[0] > e => {}
            Some((e, bm)) if value[0] == e => {
                count += 1;
                if mask < bm {
                    best = Some((e, mask));
                }
            }
            _ => {
                best = Some((value[0], mask));
                count = 1;
            }
        }
    };

    consider(&value, mask);
    for step in 1..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        let i = n - 1 - bit;
        let sign = if x[i] == 0 { 1.0 } else { -1.0 };
        x[i] ^= 1;
        for f in 0..=m {
            value[f] += sign * field[f * n + i];
            let row = &sym[(f * n + i) * n..(f * n + i + 1) * n];
            for (fv, &s) in field[f * n..(f + 1) * n].iter_mut().zip(row) {
                *fv += sign * s;
            }
        }
        mask ^= 1u64 << bit;
        consider(&value, mask);
    }

    Ok(match best {
        None => ExactResult { feasible_exists: false, e_star: None, x_star: None, num_optima: 0 },
        Some((_, mask)) => {
            let bits = (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as u8).collect();
            let x_star = BinarySolution::from_bits_unchecked(bits);
            // Report the exactly re-evaluated objective.
            let e_star = inst.objective(&x_star)?;
            ExactResult { feasible_exists: true, e_star: Some(e_star), x_star: Some(x_star), num_optima: count }
        }
    })
}

/// `|(E - E*) / E*|`.
pub fn relative_error(e: f64, e_star: f64) -> Result<f64> {
    if e_star == 0.0 {
        return Err(Error::UndefinedMetric("relative error with zero reference value"));
    }
    Ok(((e - e_star) / e_star).abs())
}

/// Fraction of positions where the two vectors differ.
pub fn hamming_distance(x: &BinarySolution, x_star: &BinarySolution) -> Result<f64> {
    if x.len() != x_star.len() {
        return Err(Error::DimensionMismatch {
            expected: x_star.len(),
            actual: x.len(),
            context: "hamming distance",
        });
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let diff = x.bits().iter().zip(x_star.bits()).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / x.len() as f64)
}

/// Uniform random bits: one SplitMix64 output per bit, bit = top bit.
pub fn random_solution(n: usize, seed: u64) -> BinarySolution {
    let mut rng = seed::rng(seed);
    BinarySolution::from_bits_unchecked((0..n).map(|_| (rng.next_u64() >> 63) as u8).collect())
}

/// Postprocessing applied to a uniformly random starting point.
pub fn random_baseline(inst: &ProblemInstance, seed: u64, pp: &PpConfig) -> Result<PpResult> {
    postprocess(inst, &random_solution(inst.n(), seed), pp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CgExactPp,
    CgSaPp,
    RandomPp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CgExactPp, Method::CgSaPp, Method::RandomPp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CgExactPp => "cg_exact_pp",
            Self::CgSaPp => "cg_sa_pp",
            Self::RandomPp => "random_pp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub n_values: Vec<usize>,
    pub ratio_values: Vec<f64>,
    pub instances_per_cell: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub pp: PpConfig,
    pub cg: CgConfig,
    pub oracle_limit: usize,
}

impl ExperimentSpec {
    pub fn new(n_values: Vec<usize>, ratio_values: Vec<f64>, instances_per_cell: usize, base_seed: u64, methods: Vec<Method>) -> Self {
        Self {
            n_values,
            ratio_values,
            instances_per_cell,
            base_seed,
            methods,
            pp: PpConfig::default(),
            cg: CgConfig::default(),
            oracle_limit: ORACLE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances_per_cell == 0 {
            return Err(Error::InvalidConfig("instances_per_cell must be at least 1".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::InvalidConfig("n values must be positive".into()));
        }
        if self.ratio_values.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidConfig("ratios must be finite and non-negative".into()));
        }
        self.pp.validate()
    }
}

/// `m = round(ratio * n)`, at least 1.
pub fn constraints_for(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).max(1)
}

/// Seed of instance `instance_index` in cell `(n, ratio_index)`:
/// SplitMix64-chained mix of the base seed with the three identifiers.
pub fn instance_seed(base_seed: u64, n: usize, ratio_index: usize, instance_index: usize) -> u64 {
    seed::derive_all(base_seed, &[n as u64, ratio_index as u64, instance_index as u64])
}

const SA_SEED_TAG: u64 = 0x5341;
const RANDOM_SEED_TAG: u64 = 0x524e;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub m: usize,
    pub ratio: f64,
    pub ratio_index: usize,
    pub instance_index: usize,
    pub seed: u64,
    pub method: Method,
    pub relax_obj: Option<f64>,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    #[serde(rename = "E_star")]
    pub e_star: Option<f64>,
    pub relative_error: Option<f64>,
    /// `|E - E*|`, filled when the relative error is undefined (`E* = 0`).
    pub absolute_error: Option<f64>,
    /// Distance of the rounded relaxation to the oracle optimum.
    pub hamming: Option<f64>,
    pub multiple_optima: bool,
    pub feasible: bool,
    pub cg_iterations: Option<usize>,
    pub cg_termination: Option<Termination>,
    pub restoration_flips: Option<usize>,
    pub optimization_flips: Option<usize>,
    pub time_cg_ms: Option<f64>,
    pub time_pp_ms: Option<f64>,
    pub time_total_ms: f64,
    pub error: Option<String>,
}

impl InstanceRecord {
    fn blank(n: usize, m: usize, ratio: f64, ri: usize, ii: usize, seed: u64, method: Method) -> Self {
        Self {
            n,
            m,
            ratio,
            ratio_index: ri,
            instance_index: ii,
            seed,
            method,
            relax_obj: None,
            e: None,
            e_star: None,
            relative_error: None,
            absolute_error: None,
            hamming: None,
            multiple_optima: false,
            feasible: false,
            cg_iterations: None,
            cg_termination: None,
            restoration_flips: None,
            optimization_flips: None,
            time_cg_ms: None,
            time_pp_ms: None,
            time_total_ms: 0.0,
            error: None,
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run_method(
    inst: &ProblemInstance,
    inst_seed: u64,
    method: Method,
    spec: &ExperimentSpec,
    oracle: Option<&ExactResult>,
    rec: &mut InstanceRecord,
) -> Result<()> {
    let start = Instant::now();
    let (pp_result, x_init) = match method {
        Method::CgExactPp | Method::CgSaPp => {
            let backend = if method == Method::CgExactPp { PricingBackend::Exact } else { PricingBackend::Sa };
            let mut cg = spec.cg.clone();
            cg.pricing_backend = backend;
            cg.sa_config.seed = seed::derive(inst_seed, SA_SEED_TAG);
            let t = Instant::now();
            let result = run_cg(inst, &[BinarySolution::unit_first(inst.n())], &cg)?;
            rec.time_cg_ms = Some(ms(t));
            rec.relax_obj = Some(result.relax_obj);
            rec.cg_iterations = Some(result.iterations);
            rec.cg_termination = Some(result.termination);
            let x_init = round_solution(&result.x_matrix);
            let t = Instant::now();
            let pp = postprocess(inst, &x_init, &spec.pp)?;
            rec.time_pp_ms = Some(ms(t));
            (pp, Some(x_init))
        }
        Method::RandomPp => {
            let t = Instant::now();
            let pp = random_baseline(inst, seed::derive(inst_seed, RANDOM_SEED_TAG), &spec.pp)?;
            rec.time_pp_ms = Some(ms(t));
            (pp, None)
        }
    };
    rec.time_total_ms = ms(start);
    rec.feasible = pp_result.is_feasible();
    rec.e = pp_result.objective();
    rec.restoration_flips = Some(pp_result.restoration_flips);
    rec.optimization_flips = Some(pp_result.optimization_flips);

    if let Some(exact) = oracle {
        rec.e_star = exact.e_star;
        rec.multiple_optima = exact.num_optima > 1;
        if let (Some(x0), Some(xs)) = (&x_init, &exact.x_star) {
            rec.hamming = Some(hamming_distance(x0, xs)?);
        }
        if let (Some(e), Some(es)) = (rec.e, exact.e_star) {
            match relative_error(e, es) {
                Ok(r) => rec.relative_error = Some(r),
                Err(_) => rec.absolute_error = Some((e - es).abs()),
            }
        }
    }
    Ok(())
}

/// Runs every `(n, ratio, instance, method)` unit of the sweep in parallel.
/// Records come back in canonical order: n, ratio, instance, method.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<InstanceRecord>> {
    spec.validate()?;
    if spec.methods.is_empty() {
        return Ok(Vec::new());
    }
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();

    let units: Vec<(usize, usize, usize)> = spec
        .n_values
        .iter()
        .flat_map(|&n| {
            (0..spec.ratio_values.len())
                .flat_map(move |ri| (0..spec.instances_per_cell).map(move |ii| (n, ri, ii)))
        })
        .collect();

    let mut records: Vec<InstanceRecord> = units
        .par_iter()
        .flat_map_iter(|&(n, ri, ii)| {
            let ratio = spec.ratio_values[ri];
            let m = constraints_for(n, ratio);
            let s = instance_seed(spec.base_seed, n, ri, ii);
            let inst = ProblemInstance::generate_random(n, m, s);
            let oracle = if n <= spec.oracle_limit {
                solve_exact_original_with_limit(&inst, spec.oracle_limit).ok()
            } else {
                None
            };
            methods
                .iter()
                .map(|&method| {
                    let mut rec = InstanceRecord::blank(n, m, ratio, ri, ii, s, method);
                    if let Err(e) = run_method(&inst, s, method, spec, oracle.as_ref(), &mut rec) {
                        rec.error = Some(e.to_string());
                        rec.e_star = oracle.as_ref().and_then(|o| o.e_star);
                    }
                    rec
                })
                .collect::<Vec<_>>()
        })
        .collect();

    records.sort_by(|a, b| {
        (a.n, a.ratio_index, a.instance_index, a.method).cmp(&(b.n, b.ratio_index, b.instance_index, b.method))
    });
    Ok(records)
}

/// Per-cell aggregate: mean and standard error of the main metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub ratio: f64,
    pub method: Method,
    pub records: usize,
    pub feasibility_rate: f64,
    pub relative_error: Option<MeanSe>,
    pub hamming: Option<MeanSe>,
    pub cg_iterations: Option<MeanSe>,
    pub restoration_flips: Option<MeanSe>,
    pub time_total_ms: Option<MeanSe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn mean_se(values: &[f64]) -> Option<MeanSe> {
    let k = values.len();
    if k == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let stderr = if k > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanSe { mean, stderr, count: k })
}

pub fn summarize(records: &[InstanceRecord]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(usize, usize, Method), Vec<&InstanceRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.n, r.ratio_index, r.method)).or_default().push(r);
    }
    cells
        .into_values()
        .map(|rs| {
            let collect = |f: &dyn Fn(&InstanceRecord) -> Option<f64>| {
                mean_se(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            CellSummary {
                n: rs[0].n,
                ratio: rs[0].ratio,
                method: rs[0].method,
                records: rs.len(),
                feasibility_rate: rs.iter().filter(|r| r.feasible).count() as f64 / rs.len() as f64,
                relative_error: collect(&|r| r.relative_error),
                hamming: collect(&|r| r.hamming),
                cg_iterations: collect(&|r| r.cg_iterations.map(|v| v as f64)),
                restoration_flips: collect(&|r| r.restoration_flips.map(|v| v as f64)),
                time_total_ms: collect(&|r| Some(r.time_total_ms)),
            }
        })
        .collect()
}

pub const CSV_HEADER: [&str; 18] = [
    "n",
    "m",
    "ratio",
    "seed",
    "method",
    "relax_obj",
    "E",
    "E_star",
    "relative_error",
    "hamming",
    "feasible",
    "cg_iterations",
    "cg_termination",
    "restoration_flips",
    "optimization_flips",
    "time_cg_ms",
    "time_pp_ms",
    "time_total_ms",
];

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_real(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

impl InstanceRecord {
    pub fn csv_row(&self) -> [String; 18] {
        [
            self.n.to_string(),
            self.m.to_string(),
            format_real(self.ratio),
            self.seed.to_string(),
            self.method.to_string(),
            opt_real(self.relax_obj),
            opt_real(self.e),
            opt_real(self.e_star),
            opt_real(self.relative_error),
            opt_real(self.hamming),
            self.feasible.to_string(),
            opt(self.cg_iterations),
            opt(self.cg_termination),
            opt(self.restoration_flips),
            opt(self.optimization_flips),
            opt_real(self.time_cg_ms),
            opt_real(self.time_pp_ms),
            format_real(self.time_total_ms),
        ]
    }
}

pub fn write_csv<W: Write>(records: &[InstanceRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()
}

/// Least-squares fit of `ln y = a x + b`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::InvalidConfig("exponential fit needs at least two points".into()));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidConfig(format!("exponential fit needs finite x and y > 0, got ({x}, {y})")));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("exponential fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = points.iter().zip(&ly).map(|(p, l)| (p.0 - mx) * (l - my)).sum();
    let a = sxy / sxx;
    Ok((a, my - a * mx))
}
