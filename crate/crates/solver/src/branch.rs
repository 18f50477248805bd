//! Best-bound branch-and-bound over the reference simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use log::debug;

use crate::simplex::{solve_with_bounds, LpResult};
use crate::{ObjectiveSense, SolveOutcome, SolveRequest, SolveStats, SolverError, Status};

struct Node {
    /// Relaxation objective of the node, in minimisation sense.
    bound: f64,
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound (then the oldest node) must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Solve a MILP by branch-and-bound: most-fractional branching, best-bound node selection.
///
/// Problems without integer variables are solved as plain LPs.
pub fn solve_milp(request: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError> {
    request.validate()?;
    let problem = request.problem;
    let tol = request.tolerances;
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(request.limits.time_limit);
    let sign = match problem.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };

    let integer: Vec<usize> = (0..problem.variables.len())
        .filter(|&j| problem.variables[j].integer)
        .collect();
    let mut lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();
    for &j in &integer {
        lower[j] = (lower[j] - tol.integrality).ceil();
        upper[j] = (upper[j] + tol.integrality).floor();
    }

    let mut iterations = 0u64;
    let solve_node = |lower: &[f64], upper: &[f64], iterations: &mut u64| -> LpResult {
        let remaining = request.limits.max_iterations.saturating_sub(*iterations).max(1);
        let lp = solve_with_bounds(problem, lower, upper, &tol, remaining, deadline);
        *iterations += lp.iterations;
        lp
    };

    let root = solve_node(&lower, &upper, &mut iterations);
    let stats = |iterations, nodes| SolveStats {
        iterations,
        nodes,
        wall_time: started.elapsed(),
    };
    match root.status {
        Status::Optimal => {}
        status => return Ok(SolveOutcome::without_solution(status, stats(iterations, 0))),
    }

    let fractional = |x: &[f64]| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &integer {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist > tol.integrality && best.is_none_or(|(_, d)| dist > d) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    };
    let snap = |mut x: Vec<f64>| -> (Vec<f64>, f64) {
        for &j in &integer {
            x[j] = x[j].round();
        }
        let obj = problem.objective_value(&x);
        (x, obj)
    };

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut nodes = 0u64;

    if fractional(&root.x).is_none() {
        let (x, obj) = snap(root.x);
        return Ok(SolveOutcome {
            status: Status::Optimal,
            primal: Some(x),
            objective: Some(obj),
            duals: None,
            best_bound: Some(root.objective),
            gap: Some(0.0),
            stats: stats(iterations, 0),
        });
    }
    heap.push(Node {
        bound: sign * root.objective,
        id: next_id,
        lower,
        upper,
        x: root.x,
    });
    next_id += 1;

    let mut limit_hit = false;
    // Bound at which the search stopped because the gap closed.
    let mut gap_closed_at: Option<f64> = None;
    while let Some(node) = heap.pop() {
        if let Some((_, inc)) = &incumbent {
            let inc_min = sign * inc;
            if node.bound >= inc_min || relative_gap(inc_min, node.bound) <= tol.mip_relative_gap {
                gap_closed_at = Some(node.bound.min(inc_min));
                break;
            }
        }
        if nodes >= request.limits.max_nodes || Instant::now() >= deadline {
            limit_hit = true;
            heap.push(node);
            break;
        }
        let Some(j) = fractional(&node.x) else {
            unreachable!("integral relaxations become incumbents and are never queued");
        };
        nodes += 1;
        let value = node.x[j];
        for up in [false, true] {
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            if up {
                lo[j] = value.ceil();
            } else {
                hi[j] = value.floor();
            }
            let lp = solve_node(&lo, &hi, &mut iterations);
            match lp.status {
                Status::Optimal => {}
                Status::Infeasible => continue,
                Status::Unbounded => {
                    return Ok(SolveOutcome::without_solution(
                        Status::Unbounded,
                        stats(iterations, nodes),
                    ))
                }
                _ => {
                    limit_hit = true;
                    break;
                }
            }
            let child_bound = sign * lp.objective;
            if let Some((_, inc)) = &incumbent {
                if child_bound >= sign * inc {
                    continue;
                }
            }
            if fractional(&lp.x).is_none() {
                let (x, obj) = snap(lp.x);
                if incumbent.as_ref().is_none_or(|(_, inc)| sign * obj < sign * inc) {
                    debug!("new incumbent {obj} at node {nodes}");
                    incumbent = Some((x, obj));
                }
            } else {
                heap.push(Node {
                    bound: child_bound,
                    id: next_id,
                    lower: lo,
                    upper: hi,
                    x: lp.x,
                });
                next_id += 1;
            }
        }
        if limit_hit {
            // The node's subtree is only partly explored; keep its bound in play.
            heap.push(node);
            break;
        }
    }

    let stats = stats(iterations, nodes);
    match incumbent {
        Some((x, obj)) => {
            let inc_min = sign * obj;
            let bound_min = if limit_hit {
                heap.iter().map(|n| n.bound).fold(inc_min, f64::min)
            } else {
                // Either the gap closed or every subtree was explored or pruned.
                gap_closed_at.unwrap_or(inc_min)
            };
            let gap = relative_gap(inc_min, bound_min);
            let status = if gap <= tol.mip_relative_gap {
                Status::Optimal
            } else {
                Status::FeasibleWithinGap
            };
            Ok(SolveOutcome {
                status,
                primal: Some(x),
                objective: Some(obj),
                duals: None,
                best_bound: Some(sign * bound_min),
                gap: Some(gap),
                stats,
            })
        }
        None if limit_hit => Ok(SolveOutcome::without_solution(Status::LimitReached, stats)),
        None => Ok(SolveOutcome::without_solution(Status::Infeasible, stats)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Limits, Problem, RowSense, Tolerances};

    #[test]
    fn rounds_up_to_integer() {
        let mut p = Problem::default();
        let x = p.add_variable("x", 0.0, f64::INFINITY, 1.0, true);
        p.add_constraint("c", vec![(x, 1.0)], RowSense::Ge, 2.5);
        let out = solve_milp(&SolveRequest::new(&p)).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.primal.unwrap()[0], 3.0);
        assert_eq!(out.objective, Some(3.0));
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut p = Problem::default();
        let x = p.add_variable("x", 0.0, 10.0, 1.0, true);
        let y = p.add_variable("y", 0.0, 10.0, 2.0, true);
        p.add_constraint("c", vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 4.0);
        let out = solve_milp(&SolveRequest::new(&p)).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.stats.nodes, 0);
        assert_eq!(out.objective, Some(4.0));
    }

    #[test]
    fn infeasible_integer_band() {
        let mut p = Problem::default();
        let x = p.add_variable("x", 0.0, 10.0, 1.0, true);
        p.add_constraint("lo", vec![(x, 1.0)], RowSense::Ge, 2.2);
        p.add_constraint("hi", vec![(x, 1.0)], RowSense::Le, 2.8);
        let out = solve_milp(&SolveRequest::new(&p)).unwrap();
        assert_eq!(out.status, Status::Infeasible);
        assert!(out.primal.is_none());
    }

    #[test]
    fn node_limit_keeps_honest_gap() {
        // max sum v_i x_i, sum w_i x_i <= W over binaries; a single node cannot close it.
        let values = [10.0, 13.0, 7.0, 8.0, 11.0, 9.0, 6.0, 12.0];
        let weights = [5.0, 7.0, 4.0, 4.5, 6.0, 5.0, 3.5, 6.5];
        let mut p = Problem::new("knap", ObjectiveSense::Maximize);
        let xs: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| p.add_variable(format!("x{i}"), 0.0, 1.0, v, true))
            .collect();
        p.add_constraint(
            "w",
            xs.iter().zip(weights).map(|(&x, w)| (x, w)).collect(),
            RowSense::Le,
            17.3,
        );
        let limited = SolveRequest::new(&p).with_limits(Limits {
            max_nodes: 1,
            ..Default::default()
        });
        let out = solve_milp(&limited).unwrap();
        if out.status == Status::FeasibleWithinGap {
            let obj = out.objective.unwrap();
            let bound = out.best_bound.unwrap();
            assert!(bound >= obj - 1e-9);
            assert!(out.gap.unwrap() > 0.0);
        } else {
            assert_eq!(out.status, Status::LimitReached);
            assert!(out.primal.is_none());
        }

        let exact = SolveRequest::new(&p).with_tolerances(Tolerances {
            mip_relative_gap: 1e-9,
            ..Default::default()
        });
        let full = solve_milp(&exact).unwrap();
        assert_eq!(full.status, Status::Optimal);
        assert!(full.objective.unwrap() >= out.objective.unwrap_or(f64::NEG_INFINITY) - 1e-9);
    }
}
