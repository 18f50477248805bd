//! Solver-independent optimisation core.
//!
//! Problems are expressed in a small intermediate representation ([`Problem`]) and solved
//! through the [`Backend`] trait. Two backends ship with the crate:
//!
//! * [`ReferenceBackend`]: a dense tableau primal simplex with Bland's anti-cycling fallback,
//!   plus best-bound branch-and-bound for integer variables. Deterministic and dependency
//!   free, intended for desk-scale instances (a few thousand variables at most).
//! * `HighsBackend` (feature `highs`, on by default): an in-process adapter to the HiGHS
//!   solver for full-horizon instances that are out of reach for a dense tableau.
//!
//! [`lpfile`] writes and reads the CPLEX-style LP text format so any external engine can
//! consume an exported instance.

mod branch;
mod error;
#[cfg(feature = "highs")]
mod highs_backend;
pub mod lpfile;
mod problem;
mod request;
mod simplex;
pub mod verify;

pub use branch::solve_milp;
pub use error::SolverError;
#[cfg(feature = "highs")]
pub use highs_backend::HighsBackend;
pub use problem::{Constraint, ObjectiveSense, Problem, RowSense, VarId, Variable};
pub use request::{
    Backend, Limits, ReferenceBackend, SolveOutcome, SolveRequest, SolveStats, Status, Tolerances,
};
pub use simplex::solve_lp;
