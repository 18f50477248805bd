//! Capacity-expansion model: catalog, instance compilation in three scopes, solution decoding.
//!
//! Every scope is compiled by the same routine from a list of chronological blocks: the full
//! horizon is one block, a slice is one block with prorated investment costs, and a reduced
//! model is one block per representative with its operating costs multiplied by its weight.

mod audit;
mod build;
mod catalog;
mod solution;

use std::fmt;

use adaptagg_solver::{SolverError, Status};
use serde::{Deserialize, Serialize};

pub use audit::{audit, AuditReport};
pub use build::{
    build_full, build_reduced, build_slice, Block, BlockVars, BuildOptions, EsomInstance, Scope,
    SocBoundary, VarIndex,
};
pub use catalog::{IreTech, Policy, StorageTech, TechCatalog, ThermalSizing, ThermalTech};
pub use solution::{extract_costs, BlockDispatch, Capacities, CostBreakdown, PlanSolution};

use crate::TechId;

/// Linear: renewables and storage only. Integer: adds thermal units with unit commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Linear,
    Integer,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Linear => "linear",
            Variant::Integer => "integer",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Variant::Linear),
            "integer" => Ok(Variant::Integer),
            other => Err(format!("unknown variant `{other}` (linear | integer)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("renewable portfolio standard {0} is outside [0, 1]")]
    InvalidPolicy(f64),
    #[error("{variant} variant cannot be built with {thermal} thermal technologies")]
    VariantMismatch { variant: Variant, thermal: usize },
    #[error("the catalog has no renewable technology")]
    NoRenewables,
    #[error("no capacity-factor series for renewable `{0}`")]
    MissingProfile(TechId),
    #[error("the horizon is empty")]
    EmptyHorizon,
    #[error("slice {index} lies outside the {hours} h horizon")]
    SliceOutOfRange { index: usize, hours: usize },
    #[error("aggregation does not fit the horizon: {0}")]
    InconsistentAggregation(String),
    #[error("solver finished with status {0} and no solution")]
    NoSolution(Status),
    #[error("recomputed cost {recomputed} disagrees with solver objective {reported}")]
    CostMismatch { recomputed: f64, reported: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[cfg(test)]
mod tests;
