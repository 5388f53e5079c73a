//! Sparse linear SVMs with a Bernstein-smoothed hinge loss.
//!
//! Two solvers share one model: a majorized coordinate descent ([`gcd`])
//! and a constant-curvature IRLS ([`irls`]). Elastic-net and adaptive
//! elastic-net penalties are solved directly; SCAD and MCP go through
//! local linear approximation ([`lla`]).

pub mod cv;
pub mod data;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod gcd;
pub mod irls;
pub mod lla;
pub mod loss;
pub mod metrics;
pub mod oracle;
pub mod path;
pub mod penalty;
pub mod persist;
pub mod simdata;

pub use data::{read_csv, read_csv_path, standardize, write_csv, Dataset, StandardizedDesign};
pub use error::{BernError, Result};
pub use fit::{Engine, ModelFit, SolverOptions, WarmStart};
pub use loss::LossSpec;
pub use path::{fit_model, fit_path, lambda_grid, PathResult};
pub use penalty::{PenaltyFamily, PenaltySpec};
