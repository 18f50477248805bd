//! Post-solve checks that are independent of any solver implementation.

use crate::{ObjectiveSense, Problem, RowSense};

/// Worst violations of a point against a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub max_bound_violation: f64,
    pub max_row_violation: f64,
    pub worst_row: Option<usize>,
    pub max_integrality_violation: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tolerance: f64) -> bool {
        self.max_bound_violation <= tolerance && self.max_row_violation <= tolerance
    }
}

/// Evaluate every bound and every row at `x`.
///
/// Row violations are scaled by `max(1, |rhs|)` so that tolerances behave the same for rows with
/// large right-hand sides (hourly demand in MWh) and for unit rows.
pub fn check_feasibility(problem: &Problem, x: &[f64]) -> FeasibilityReport {
    assert_eq!(x.len(), problem.variables.len(), "point has wrong dimension");
    let mut max_bound_violation: f64 = 0.0;
    let mut max_integrality_violation: f64 = 0.0;
    for (v, &xi) in problem.variables.iter().zip(x) {
        let below = v.lower - xi;
        let above = xi - v.upper;
        max_bound_violation = max_bound_violation.max(below).max(above);
        if v.integer {
            max_integrality_violation = max_integrality_violation.max((xi - xi.round()).abs());
        }
    }
    let mut max_row_violation: f64 = 0.0;
    let mut worst_row = None;
    for (i, c) in problem.constraints.iter().enumerate() {
        let mut lhs = 0.0;
        for &(v, a) in &c.terms {
            lhs += a * x[v.0];
        }
        let diff = lhs - c.rhs;
        let raw = match c.sense {
            RowSense::Le => diff,
            RowSense::Ge => -diff,
            RowSense::Eq => diff.abs(),
        };
        let scaled = raw / c.rhs.abs().max(1.0);
        if scaled > max_row_violation {
            max_row_violation = scaled;
            worst_row = Some(i);
        }
    }
    FeasibilityReport {
        max_bound_violation,
        max_row_violation,
        worst_row,
        max_integrality_violation,
    }
}

/// Lagrangian dual bound `sum_i y_i b_i + opt_{l <= x <= u} (c - A'y)'x`.
///
/// For a minimisation with valid multiplier signs (`y >= 0` on `>=` rows, `y <= 0` on `<=` rows)
/// this is a lower bound on the optimum; for a maximisation it is an upper bound. Reduced costs
/// with magnitude below `zero_tol * (1 + |c_j|)` are treated as zero so that round-off does not
/// send the bound to infinity along unbounded directions.
pub fn lagrangian_bound(problem: &Problem, duals: &[f64], zero_tol: f64) -> f64 {
    assert_eq!(duals.len(), problem.constraints.len());
    let mut reduced: Vec<f64> = problem.variables.iter().map(|v| v.cost).collect();
    let mut bound = 0.0;
    for (c, &y) in problem.constraints.iter().zip(duals) {
        bound += y * c.rhs;
        for &(v, a) in &c.terms {
            reduced[v.0] -= y * a;
        }
    }
    let minimise = problem.sense == ObjectiveSense::Minimize;
    for (v, &r) in problem.variables.iter().zip(&reduced) {
        if r.abs() <= zero_tol * (1.0 + v.cost.abs()) {
            continue;
        }
        // Minimisation pushes x to its lower bound when r > 0; maximisation to its upper bound.
        let at = if (r > 0.0) == minimise { v.lower } else { v.upper };
        if !at.is_finite() {
            return if minimise {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
        }
        bound += r * at;
    }
    bound
}

/// Check the dual multipliers carry the signs that make [`lagrangian_bound`] valid.
pub fn dual_signs_valid(problem: &Problem, duals: &[f64], tol: f64) -> bool {
    let flip = match problem.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };
    problem
        .constraints
        .iter()
        .zip(duals)
        .all(|(c, &y)| match c.sense {
            RowSense::Ge => flip * y >= -tol,
            RowSense::Le => flip * y <= tol,
            RowSense::Eq => true,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_row_and_bound_violations() {
        let mut p = Problem::default();
        let x = p.add_variable("x", 0.0, 2.0, 1.0, true);
        p.add_constraint("c", vec![(x, 1.0)], RowSense::Ge, 1.0);
        let ok = check_feasibility(&p, &[1.0]);
        assert!(ok.is_feasible(0.0));
        let bad = check_feasibility(&p, &[2.5]);
        assert!((bad.max_bound_violation - 0.5).abs() < 1e-12);
        assert!((bad.max_integrality_violation - 0.5).abs() < 1e-12);
        let low = check_feasibility(&p, &[0.5]);
        assert_eq!(low.worst_row, Some(0));
    }

    #[test]
    fn lagrangian_bound_below_primal() {
        // min x + y, x + y >= 2, x,y in [0, 10]
        let mut p = Problem::default();
        let x = p.add_variable("x", 0.0, 10.0, 1.0, false);
        let y = p.add_variable("y", 0.0, 10.0, 1.0, false);
        p.add_constraint("c", vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 2.0);
        assert!((lagrangian_bound(&p, &[1.0], 1e-12) - 2.0).abs() < 1e-12);
        assert!(lagrangian_bound(&p, &[0.5], 1e-12) <= 2.0);
        assert!(dual_signs_valid(&p, &[0.5], 0.0));
        assert!(!dual_signs_valid(&p, &[-0.5], 0.0));
    }
}
