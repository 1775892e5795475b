//! Two-way interaction truncated linear MARS (TITL-MARS) surrogates and their
//! certified global optimization.
//!
//! The crate covers the whole pipeline:
//!
//! - [`model`]: the model type, evaluation, the text document format and an
//!   exhaustive knot-grid oracle.
//! - [`fit`]: forward/backward MARS fitting restricted to degree-2 interactions.
//! - [`miqp`]: the big-M mixed-integer quadratic reformulation of a model.
//! - [`lp`]: a bounded-variable primal simplex used for node relaxations.
//! - [`solver`]: branch-and-bound with McCormick relaxations that returns a
//!   solution together with an optimality certificate.
//! - [`ga`]: the binary-coded genetic algorithm used as a baseline.
//! - [`windfarm`]: Jensen wake simulation and Monte Carlo power maps.
//! - [`bench`]: analytic test functions and the benchmark harness.

pub mod bench;
pub mod error;
pub mod fit;
pub mod ga;
pub mod lp;
pub mod miqp;
pub mod model;
pub mod solution;
pub mod solver;
pub mod windfarm;

pub use error::{Error, Result};
pub use fit::{fit, Dataset, FitConfig};
pub use ga::{GaParams, GaPreset};
pub use miqp::{build_miqp, MiqpProblem};
pub use model::{
    oracle_optimum, parse_model, serialize_model, BasisFunction, KnotGrid, OracleConfig, Sign,
    TitlMarsModel, TruncatedTerm, VarKind,
};
pub use solution::{Sense, Solution, SolveStats, SolveStatus};
pub use solver::{solve, SolverConfig};
