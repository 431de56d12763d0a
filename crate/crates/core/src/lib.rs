//! Sparse linear regression with the Lasso and Slope estimators.
//!
//! The crate bundles the estimators with the analytic machinery around them:
//!
//! - sorted-l1 norms, recommended Slope weights and the scalar tuning
//!   formulas ([`norms`], [`tuning`]);
//! - proximal operators with an independent validation oracle ([`prox`]);
//! - the solvers themselves, in the objective scaling the tuning rules are
//!   calibrated for ([`solver`]);
//! - a sparsity-adaptive Lasso built from a dyadic family of fits and a
//!   Lepski-type selector ([`adaptive`]);
//! - restricted-eigenvalue-type design conditions: membership tests,
//!   sparse eigenvalues and constant brackets ([`conditions`]);
//! - seeded generators for designs, noise, sparse coefficients and packing
//!   sets ([`generate`]);
//! - a Monte-Carlo harness that checks the oracle inequalities, event
//!   probabilities and the error-rate scaling empirically ([`harness`]).

pub mod adaptive;
pub mod conditions;
pub mod design;
pub mod error;
pub mod generate;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod prox;
pub mod solver;
pub mod tuning;

pub use design::DesignMatrix;
pub use error::{Error, Result};
pub use norms::WeightVector;
pub use solver::FitResult;
