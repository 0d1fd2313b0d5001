//! Linear SVM training by a semismooth Newton augmented Lagrangian method.
//!
//! Supports L1-loss classification and epsilon-insensitive regression on
//! LIBSVM-format sparse data. [`alm::alm_solve`] returns the weights together
//! with a [`alm::SolveReport`] holding the KKT residuals and duality gap of the
//! final iterate.

pub mod alm;
pub mod baseline;
pub mod cli;
pub mod data;
pub mod metrics;
pub mod model_file;
pub mod newton;
pub mod prox;
pub mod sparse;
pub mod synthetic;

pub use alm::{alm_solve, build_svc, build_svr, AlmError, Problem, SolveReport, SolverConfig, Task};
pub use data::{Dataset, LabelMap};
pub use metrics::Model;
pub use sparse::SparseMatrix;
