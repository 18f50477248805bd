use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::{
    Backend, ObjectiveSense, RowSense, SolveOutcome, SolveRequest, SolveStats, SolverError, Status,
};

/// In-process adapter to the HiGHS solver.
///
/// Integer columns are snapped to the nearest integer in the returned point and the objective is
/// recomputed from the snapped values.
#[derive(Debug, Clone, Copy)]
pub struct HighsBackend {
    pub presolve: bool,
}

impl Default for HighsBackend {
    fn default() -> Self {
        HighsBackend { presolve: true }
    }
}

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, request: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError> {
        request.validate()?;
        let started = Instant::now();
        let problem = request.problem;

        let mut pb = RowProblem::default();
        let cols: Vec<_> = problem
            .variables
            .iter()
            .map(|v| pb.add_column_with_integrality(v.cost, v.lower..=v.upper, v.integer))
            .collect();
        for c in &problem.constraints {
            let terms: Vec<_> = c.terms.iter().map(|&(v, a)| (cols[v.0], a)).collect();
            match c.sense {
                RowSense::Le => pb.add_row(..=c.rhs, terms),
                RowSense::Ge => pb.add_row(c.rhs.., terms),
                RowSense::Eq => pb.add_row(c.rhs..=c.rhs, terms),
            }
        }
        let sense = match problem.sense {
            ObjectiveSense::Minimize => Sense::Minimise,
            ObjectiveSense::Maximize => Sense::Maximise,
        };
        let mut model = pb
            .try_optimise(sense)
            .map_err(|s| SolverError::Backend(format!("HiGHS rejected the model: {s:?}")))?;
        model.make_quiet();
        let tol = &request.tolerances;
        let limits = &request.limits;
        model.set_option("presolve", if self.presolve { "on" } else { "off" });
        model.set_option("primal_feasibility_tolerance", tol.feasibility);
        model.set_option("dual_feasibility_tolerance", tol.optimality);
        model.set_option("mip_feasibility_tolerance", tol.integrality);
        model.set_option("mip_rel_gap", tol.mip_relative_gap);
        model.set_option("time_limit", limits.time_limit);
        model.set_option(
            "simplex_iteration_limit",
            limits.max_iterations.min(i32::MAX as u64) as i32,
        );
        model.set_option("mip_max_nodes", limits.max_nodes.min(i32::MAX as u64) as i32);

        let solved = model
            .try_solve()
            .map_err(|s| SolverError::Backend(format!("HiGHS run failed: {s:?}")))?;
        let model_status = solved.status();
        let is_mip = problem.has_integers();
        let stats = SolveStats {
            iterations: solved.simplex_iteration_count().max(0) as u64,
            nodes: if is_mip {
                solved
                    .int_info_value(c"mip_node_count")
                    .map(|n| n.max(0) as u64)
                    .unwrap_or(0)
            } else {
                0
            },
            wall_time: started.elapsed(),
        };

        let has_point = matches!(
            solved.primal_solution_status(),
            highs::HighsSolutionStatus::Feasible
        );
        let status = match model_status {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => Status::Optimal,
            HighsModelStatus::Infeasible => Status::Infeasible,
            HighsModelStatus::Unbounded => Status::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => {
                // Resolve the ambiguity with presolve off, where HiGHS can tell them apart.
                if self.presolve {
                    return HighsBackend { presolve: false }.solve(request);
                }
                Status::Infeasible
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => {
                if is_mip && has_point {
                    Status::FeasibleWithinGap
                } else {
                    Status::LimitReached
                }
            }
            other => {
                return Err(SolverError::Backend(format!(
                    "HiGHS ended with model status {other:?}"
                )))
            }
        };
        if !status.has_solution() {
            return Ok(SolveOutcome::without_solution(status, stats));
        }

        let solution = solved.get_solution();
        let mut x = solution.columns().to_vec();
        if x.len() != problem.variables.len() {
            x.resize(problem.variables.len(), 0.0);
        }
        for (xi, v) in x.iter_mut().zip(&problem.variables) {
            if v.integer {
                *xi = xi.round();
            }
            *xi = xi.clamp(v.lower, v.upper);
        }
        let objective = problem.objective_value(&x);
        let (duals, best_bound, gap) = if is_mip {
            let bound = solved
                .double_info_value(c"mip_dual_bound")
                .unwrap_or(objective);
            (None, Some(bound), Some(solved.mip_gap().max(0.0)))
        } else {
            (Some(solution.dual_rows().to_vec()), Some(objective), None)
        };
        Ok(SolveOutcome {
            status,
            primal: Some(x),
            objective: Some(objective),
            duals,
            best_bound,
            gap,
            stats,
        })
    }
}
