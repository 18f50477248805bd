use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Problem, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub integrality: f64,
    pub mip_relative_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-7,
            optimality: 1e-7,
            integrality: 1e-6,
            mip_relative_gap: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_iterations: u64,
    pub max_nodes: u64,
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_iterations: 1_000_000,
            max_nodes: 100_000,
            time_limit: 3600.0,
        }
    }
}

/// A problem together with the tolerances and limits it should be solved under.
#[derive(Debug, Clone, Copy)]
pub struct SolveRequest<'a> {
    pub problem: &'a Problem,
    pub tolerances: Tolerances,
    pub limits: Limits,
}

impl<'a> SolveRequest<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        SolveRequest {
            problem,
            tolerances: Tolerances::default(),
            limits: Limits::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("feasibility", t.feasibility),
            ("optimality", t.optimality),
            ("integrality", t.integrality),
            ("mip_relative_gap", t.mip_relative_gap),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::InvalidRequest(format!(
                    "{name} tolerance must be positive, got {v}"
                )));
            }
        }
        let l = &self.limits;
        if l.max_iterations < 1 || l.max_nodes < 1 || !(l.time_limit >= 1e-3) {
            return Err(SolverError::InvalidRequest(
                "limits must be at least 1 (time limit at least 1 ms)".into(),
            ));
        }
        self.problem.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    FeasibleWithinGap,
    Infeasible,
    Unbounded,
    LimitReached,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::FeasibleWithinGap)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::FeasibleWithinGap => "feasible-within-gap",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::LimitReached => "limit-reached",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: u64,
    /// Branch-and-bound nodes branched on (0 when the root relaxation is integral).
    pub nodes: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    /// Primal point, present iff `status.has_solution()`.
    pub primal: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Row duals of the final LP (sign convention: a valid Lagrangian multiplier for the
    /// problem's own objective sense, see [`crate::verify::lagrangian_bound`]).
    pub duals: Option<Vec<f64>>,
    /// Best proven bound on the optimum (MILP); equals the objective for LPs.
    pub best_bound: Option<f64>,
    /// Relative MIP gap of the returned incumbent.
    pub gap: Option<f64>,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub(crate) fn without_solution(status: Status, stats: SolveStats) -> Self {
        debug_assert!(!status.has_solution());
        SolveOutcome {
            status,
            primal: None,
            objective: None,
            duals: None,
            best_bound: None,
            gap: None,
            stats,
        }
    }
}

/// A solver engine that can take any [`Problem`].
///
/// Implementations must honour the outcome contract: a primal point is returned exactly when the
/// status is `Optimal` or `FeasibleWithinGap`, integer variables are integral within the
/// requested tolerance, and infeasibility or unboundedness are reported as a status rather than
/// an error.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, request: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError>;
}

/// Dense tableau simplex for LPs, branch-and-bound on top of it for MILPs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceBackend;

impl Backend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn solve(&self, request: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError> {
        if request.problem.has_integers() {
            crate::solve_milp(request)
        } else {
            crate::solve_lp(request)
        }
    }
}
