//! `cgpp` command-line interface.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{self, ExperimentSpec, Method};
use crate::colgen::{run_cg, CgConfig, PricingBackend, Termination};
use crate::error::Error;
use crate::instance::{BinarySolution, ProblemInstance};
use crate::postprocess::{postprocess, round_solution, PpConfig};
use crate::qubo::SaConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cgpp", version, about = "Column generation with greedy postprocessing for 0-1 quadratic programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random +/-1 benchmark instance
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Column generation, rounding and postprocessing on one instance
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "exact", value_parser = ["exact", "sa"])]
        pricing: String,
        /// JSON array of initial columns; defaults to (1, 0, ..., 0)
        #[arg(long)]
        initial: Option<PathBuf>,
        #[command(flatten)]
        pp: PpArgs,
        #[command(flatten)]
        cg: CgArgs,
        /// Seed for the annealing pricer
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact optimum by enumeration
    Exact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = bench::ORACLE_LIMIT)]
        limit: usize,
    },
    /// Seeded sweep over sizes, constraint ratios and methods
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        ratio_list: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of cg_exact_pp, cg_sa_pp, random_pp
        #[arg(long, value_delimiter = ',', default_value = "cg_exact_pp,random_pp")]
        methods: Vec<String>,
        #[arg(long)]
        csv: PathBuf,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = bench::ORACLE_LIMIT)]
        oracle_limit: usize,
        #[command(flatten)]
        pp: PpArgs,
        #[command(flatten)]
        cg: CgArgs,
    },
    /// Fit y = exp(a x + b) to two CSV columns
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "n")]
        x_col: String,
        #[arg(long, default_value = "time_total_ms")]
        y_col: String,
        /// Average y over rows sharing the same x before fitting
        #[arg(long)]
        group_mean: bool,
    },
}

#[derive(Debug, Args)]
struct PpArgs {
    /// Efficiency weight of the objective during feasibility restoration
    #[arg(long, default_value_t = 0.1)]
    alpha_f: f64,
    /// Efficiency weight of the objective during local optimization
    #[arg(long, default_value_t = 0.9)]
    alpha_l: f64,
    /// Flip cap T of feasibility restoration
    #[arg(long, default_value_t = 1000)]
    max_flips: usize,
}

impl PpArgs {
    fn config(&self) -> PpConfig {
        PpConfig { alpha_f: self.alpha_f, alpha_l: self.alpha_l, max_flips: self.max_flips }
    }
}

#[derive(Debug, Args)]
struct CgArgs {
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    rc_tolerance: f64,
    #[arg(long, default_value_t = 3)]
    duplicate_retries: usize,
    #[arg(long, default_value_t = 20)]
    sa_reads: usize,
    #[arg(long, default_value_t = 1000)]
    sa_sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    sa_beta_initial: f64,
    #[arg(long, default_value_t = 10.0)]
    sa_beta_final: f64,
}

impl CgArgs {
    fn config(&self, backend: PricingBackend, seed: u64) -> CgConfig {
        CgConfig {
            pricing_backend: backend,
            rc_tolerance: self.rc_tolerance,
            max_iterations: self.max_iterations,
            duplicate_retries: self.duplicate_retries,
            sa_config: SaConfig {
                num_reads: self.sa_reads,
                sweeps_per_read: self.sa_sweeps,
                beta_initial: self.sa_beta_initial,
                beta_final: self.sa_beta_final,
                seed,
            },
            ..CgConfig::default()
        }
    }
}

/// Single-instance solve output.
#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub feasible: bool,
    pub x: Option<Vec<u8>>,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    pub relax_obj: f64,
    pub cg_iterations: usize,
    pub cg_termination: Termination,
    pub restoration_flips: usize,
    pub optimization_flips: usize,
    pub time_cg_ms: f64,
    pub time_pp_ms: f64,
    pub time_total_ms: f64,
}

#[derive(Debug, Serialize)]
struct ExactOutput {
    feasible_exists: bool,
    #[serde(rename = "E_star")]
    e_star: Option<f64>,
    x_star: Option<Vec<u8>>,
    num_optima: u64,
}

#[derive(Debug, Serialize)]
struct FitOutput {
    a: f64,
    b: f64,
    points: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Parse { .. } | Error::InvalidInstance(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_instance(path: &std::path::Path) -> Result<ProblemInstance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(ProblemInstance::from_json(&text)?)
}

fn read_initial(path: &std::path::Path, n: usize) -> Result<Vec<BinarySolution>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let raw: Vec<Vec<u8>> = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: expected a JSON array of bit arrays: {e}", path.display())))?;
    raw.into_iter()
        .map(|bits| {
            if bits.len() != n {
                return Err(Failure::Usage(format!("initial column has {} bits, instance has n = {n}", bits.len())));
            }
            Ok(BinarySolution::new(bits)?)
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serialization cannot fail")
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "usage: cgpp <generate|solve|exact|bench|fit> [OPTIONS]; see --help");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let write = |out: &mut dyn Write, s: String| {
        writeln!(out, "{s}").map_err(|e| Failure::Runtime(e.to_string()))
    };
    match cmd {
        Command::Generate { n, m, seed, out: path } => {
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            let inst = ProblemInstance::generate_random(n, m, seed);
            fs::write(&path, inst.to_json()).map_err(|e| io_err(&path, e))?;
            Ok(EXIT_OK)
        }
        Command::Solve { instance, pricing, initial, pp, cg, seed } => {
            let inst = read_instance(&instance)?;
            let backend: PricingBackend = pricing.parse()?;
            let cg_cfg = cg.config(backend, seed);
            let pp_cfg = pp.config();
            pp_cfg.validate()?;
            let initial = match initial {
                Some(p) => read_initial(&p, inst.n())?,
                None => vec![BinarySolution::unit_first(inst.n())],
            };
            let start = Instant::now();
            let cg_result = run_cg(&inst, &initial, &cg_cfg)?;
            let time_cg_ms = start.elapsed().as_secs_f64() * 1e3;
            let t = Instant::now();
            let pp_result = postprocess(&inst, &round_solution(&cg_result.x_matrix), &pp_cfg)?;
            let time_pp_ms = t.elapsed().as_secs_f64() * 1e3;
            let output = SolveOutput {
                feasible: pp_result.is_feasible(),
                x: pp_result.solution().map(|x| x.bits().to_vec()),
                e: pp_result.objective(),
                relax_obj: cg_result.relax_obj,
                cg_iterations: cg_result.iterations,
                cg_termination: cg_result.termination,
                restoration_flips: pp_result.restoration_flips,
                optimization_flips: pp_result.optimization_flips,
                time_cg_ms,
                time_pp_ms,
                time_total_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            write(out, to_json(&output))?;
            Ok(if output.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Exact { instance, limit } => {
            let inst = read_instance(&instance)?;
            let r = bench::solve_exact_original_with_limit(&inst, limit)?;
            write(
                out,
                to_json(&ExactOutput {
                    feasible_exists: r.feasible_exists,
                    e_star: r.e_star,
                    x_star: r.x_star.map(|x| x.into_bits()),
                    num_optima: r.num_optima,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Bench { n_list, ratio_list, instances, seed, methods, csv, jobs, oracle_limit, pp, cg } => {
            let methods = methods
                .iter()
                .map(|s| s.trim().parse::<Method>())
                .collect::<Result<Vec<_>, _>>()?;
            let mut spec = ExperimentSpec::new(n_list, ratio_list, instances, seed, methods);
            spec.pp = pp.config();
            spec.cg = cg.config(PricingBackend::Exact, 0);
            spec.oracle_limit = oracle_limit;
            spec.cg.validate()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let records = pool.install(|| bench::run_experiment(&spec))?;
            let file = fs::File::create(&csv).map_err(|e| io_err(&csv, e))?;
            bench::write_csv(&records, file).map_err(|e| io_err(&csv, e))?;
            write(out, to_json(&bench::summarize(&records)))?;
            Ok(EXIT_OK)
        }
        Command::Fit { csv, x_col, y_col, group_mean } => {
            let points = read_points(&csv, &x_col, &y_col)?;
            let points = if group_mean { group_means(&points) } else { points };
            let (a, b) = bench::fit_exponential(&points)?;
            write(out, to_json(&FitOutput { a, b, points: points.len() }))?;
            Ok(EXIT_OK)
        }
    }
}

fn read_points(path: &std::path::Path, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>, Failure> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Failure::Usage(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Usage(format!("column `{name}` not found in {}", path.display())))
    };
    let (xi, yi) = (col(x_col)?, col(y_col)?);
    let mut points = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Failure::Usage(e.to_string()))?;
        let (xs, ys) = (row.get(xi).unwrap_or(""), row.get(yi).unwrap_or(""));
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Failure::Usage(format!("row {}: `{s}` is not a number", line + 2)))
        };
        points.push((parse(xs)?, parse(ys)?));
    }
    Ok(points)
}

fn group_means(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for &(x, y) in points {
        let g = groups.entry(x.to_bits()).or_insert((x, 0.0, 0));
        g.1 += y;
        g.2 += 1;
    }
    let mut out: Vec<(f64, f64)> = groups.into_values().map(|(x, s, k)| (x, s / k as f64)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
