//! Parallel contests between budget-constrained designers.
//!
//! Contestants of unknown skill pick one of several contests; each designer
//! commits to an interim allocation function (expected prize as a function of
//! the mass of better-ranked co-participants). This crate computes contestant
//! equilibria, designer best responses, safety-level strategies, rank-by-skill
//! prize roundings, and Monte-Carlo checks of all of the above.

pub mod bestresponse;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod instance;
pub mod rounding;
pub mod safety;
pub mod simulator;
pub mod stepcalc;

pub use error::{Error, Result};
pub use exec::Execution;
pub use stepcalc::{PLFn, StepFn};
