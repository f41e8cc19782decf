//! Column generation for inequality-constrained 0-1 quadratic programs,
//! with QUBO pricing and a greedy postprocessor that turns the relaxation
//! into a feasible binary solution.

pub mod bench;
pub mod cli;
pub mod colgen;
pub mod error;
pub mod instance;
pub mod postprocess;
pub mod qubo;
pub mod rmp;
pub mod seed;
pub mod simplex;

pub use colgen::{run_cg, CgConfig, CgResult, PricingBackend, Termination};
pub use error::{Error, Result};
pub use instance::{eval_quadratic_form, BinarySolution, FeasibilityReport, ProblemInstance, UpperTriangular};
pub use postprocess::{postprocess, PpConfig, PpOutcome, PpResult};
pub use qubo::{Qubo, QuboSolution, SaConfig};
pub use rmp::{solve_rmp, Column, ColumnPool, RmpSolution};
