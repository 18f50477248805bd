//! Dense tableau primal simplex.
//!
//! The problem is brought to standard form (`x' >= 0`, equality rows with slack, surplus and
//! artificial columns, non-negative right-hand sides), then solved with a two-phase method.
//! Entering columns follow Dantzig's rule; after a run of degenerate pivots the solver switches
//! to Bland's rule until the objective moves again, which rules out cycling.

use std::time::{Duration, Instant};

use log::trace;

use crate::{
    ObjectiveSense, Problem, RowSense, SolveOutcome, SolveRequest, SolveStats, SolverError, Status,
    Tolerances,
};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN_BEFORE_BLAND: u32 = 50;

/// Solve an LP with the reference dense simplex.
///
/// Fails with [`SolverError::IntegerVariables`] when the problem has integrality marks; call
/// it on [`Problem::relaxation`] to solve the continuous relaxation.
pub fn solve_lp(request: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError> {
    request.validate()?;
    if request.problem.has_integers() {
        return Err(SolverError::IntegerVariables);
    }
    let lower: Vec<f64> = request.problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = request.problem.variables.iter().map(|v| v.upper).collect();
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(request.limits.time_limit);
    let lp = solve_with_bounds(
        request.problem,
        &lower,
        &upper,
        &request.tolerances,
        request.limits.max_iterations,
        deadline,
    );
    let stats = SolveStats {
        iterations: lp.iterations,
        nodes: 0,
        wall_time: started.elapsed(),
    };
    Ok(match lp.status {
        Status::Optimal => SolveOutcome {
            status: Status::Optimal,
            objective: Some(lp.objective),
            best_bound: Some(lp.objective),
            primal: Some(lp.x),
            duals: Some(lp.duals),
            gap: None,
            stats,
        },
        status => SolveOutcome::without_solution(status, stats),
    })
}

/// Result of one LP solve under explicit variable bounds.
#[derive(Debug, Clone)]
pub(crate) struct LpResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

impl LpResult {
    fn failed(status: Status, iterations: u64) -> Self {
        LpResult {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }
}

/// How an original variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// `x = value`
    Fixed(f64),
    /// `x = offset + x'`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - x'`
    Reflected { col: usize, offset: f64 },
    /// `x = x+ - x-`
    Split { pos: usize, neg: usize },
}

struct StandardRow {
    coeffs: Vec<f64>,
    sense: RowSense,
    rhs: f64,
    /// Index of the originating constraint, `None` for bound rows.
    origin: Option<usize>,
}

/// Solve the continuous relaxation of `problem` with the given bounds (integrality ignored).
pub(crate) fn solve_with_bounds(
    problem: &Problem,
    lower: &[f64],
    upper: &[f64],
    tol: &Tolerances,
    max_iterations: u64,
    deadline: Instant,
) -> LpResult {
    let n = problem.variables.len();
    let sign = match problem.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };

    // Column mapping.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j]);
        if l > u + tol.feasibility {
            return LpResult::failed(Status::Infeasible, 0);
        }
        let map = if l.is_finite() && u.is_finite() && (u - l).abs() <= tol.feasibility {
            ColumnMap::Fixed(l)
        } else if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                bound_rows.push((col, u - l));
            }
            ColumnMap::Shifted { col, offset: l }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap::Reflected { col, offset: u }
        } else {
            let pos = ncols;
            ncols += 2;
            ColumnMap::Split { pos, neg: pos + 1 }
        };
        maps.push(map);
    }

    let mut cost = vec![0.0; ncols];
    let mut cost_offset = 0.0;
    for (j, map) in maps.iter().enumerate() {
        let c = sign * problem.variables[j].cost;
        match *map {
            ColumnMap::Fixed(v) => cost_offset += c * v,
            ColumnMap::Shifted { col, offset } => {
                cost[col] += c;
                cost_offset += c * offset;
            }
            ColumnMap::Reflected { col, offset } => {
                cost[col] -= c;
                cost_offset += c * offset;
            }
            ColumnMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let mut rows = Vec::with_capacity(problem.constraints.len() + bound_rows.len());
    for (i, con) in problem.constraints.iter().enumerate() {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = con.rhs;
        for &(v, a) in &con.terms {
            match maps[v.0] {
                ColumnMap::Fixed(val) => rhs -= a * val,
                ColumnMap::Shifted { col, offset } => {
                    coeffs[col] += a;
                    rhs -= a * offset;
                }
                ColumnMap::Reflected { col, offset } => {
                    coeffs[col] -= a;
                    rhs -= a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        rows.push(StandardRow {
            coeffs,
            sense: con.sense,
            rhs,
            origin: Some(i),
        });
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push(StandardRow {
            coeffs,
            sense: RowSense::Le,
            rhs: width,
            origin: None,
        });
    }

    let mut tableau = Tableau::new(rows, &cost, ncols);
    let mut iterations = 0u64;

    // Phase I.
    if tableau.has_artificials() {
        tableau.set_phase_one_costs();
        match tableau.run(tol, max_iterations, &mut iterations, deadline) {
            RunOutcome::Optimal => {}
            RunOutcome::Limit => return LpResult::failed(Status::LimitReached, iterations),
            // Phase I is bounded below by zero; an unbounded ray would be a numerical failure.
            RunOutcome::Unbounded => return LpResult::failed(Status::Infeasible, iterations),
        }
        let infeasibility = tableau.objective_value();
        if infeasibility > tol.feasibility * (1.0 + tableau.max_abs_rhs) {
            trace!("phase I ended with infeasibility {infeasibility:e}");
            return LpResult::failed(Status::Infeasible, iterations);
        }
        tableau.drive_out_artificials();
    }

    // Phase II.
    tableau.set_costs(&cost);
    match tableau.run(tol, max_iterations, &mut iterations, deadline) {
        RunOutcome::Optimal => {}
        RunOutcome::Limit => return LpResult::failed(Status::LimitReached, iterations),
        RunOutcome::Unbounded => return LpResult::failed(Status::Unbounded, iterations),
    }

    let values = tableau.column_values();
    let mut x = vec![0.0; n];
    for (j, map) in maps.iter().enumerate() {
        x[j] = match *map {
            ColumnMap::Fixed(v) => v,
            ColumnMap::Shifted { col, offset } => offset + values[col],
            ColumnMap::Reflected { col, offset } => offset - values[col],
            ColumnMap::Split { pos, neg } => values[pos] - values[neg],
        };
    }

    let mut duals = vec![0.0; problem.constraints.len()];
    for meta in &tableau.row_meta {
        if let Some(origin) = meta.origin {
            // The identity column of a row carries -y in the reduced-cost row.
            let y = -tableau.obj[meta.identity_col];
            let y = if meta.flipped { -y } else { y };
            duals[origin] = sign * y;
        }
    }

    let objective = problem.objective_value(&x);
    debug_assert!(
        (sign * objective - (tableau.objective_value() + cost_offset)).abs()
            <= 1e-6 * (1.0 + objective.abs()),
        "tableau objective drifted from primal objective"
    );

    LpResult {
        status: Status::Optimal,
        x,
        duals,
        objective,
        iterations,
    }
}

enum RunOutcome {
    Optimal,
    Unbounded,
    Limit,
}

#[derive(Debug, Clone, Copy)]
struct RowMeta {
    origin: Option<usize>,
    flipped: bool,
    identity_col: usize,
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x (width + 1)`, right-hand side in the last column.
    data: Vec<f64>,
    /// Reduced costs, with `-z` in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    artificial: Vec<bool>,
    row_meta: Vec<RowMeta>,
    max_abs_rhs: f64,
}

impl Tableau {
    fn new(rows: Vec<StandardRow>, cost: &[f64], nstruct: usize) -> Self {
        let m = rows.len();
        let n_aux: usize = rows
            .iter()
            .map(|r| match (r.sense, r.rhs < 0.0) {
                (RowSense::Eq, _) => 1,
                (RowSense::Le, false) | (RowSense::Ge, true) => 1,
                _ => 2,
            })
            .sum();
        let width = nstruct + n_aux;
        let stride = width + 1;
        let mut data = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut artificial = vec![false; width];
        let mut row_meta = Vec::with_capacity(m);
        let mut next = nstruct;
        let mut max_abs_rhs: f64 = 0.0;

        for (i, row) in rows.into_iter().enumerate() {
            let flipped = row.rhs < 0.0;
            let s = if flipped { -1.0 } else { 1.0 };
            let sense = match (row.sense, flipped) {
                (RowSense::Le, true) => RowSense::Ge,
                (RowSense::Ge, true) => RowSense::Le,
                (sense, _) => sense,
            };
            let base = i * stride;
            for (j, a) in row.coeffs.iter().enumerate() {
                data[base + j] = s * a;
            }
            let rhs = s * row.rhs;
            data[base + width] = rhs;
            max_abs_rhs = max_abs_rhs.max(rhs.abs());
            let identity_col = match sense {
                RowSense::Le => {
                    data[base + next] = 1.0;
                    next += 1;
                    next - 1
                }
                RowSense::Ge => {
                    data[base + next] = -1.0;
                    data[base + next + 1] = 1.0;
                    artificial[next + 1] = true;
                    next += 2;
                    next - 1
                }
                RowSense::Eq => {
                    data[base + next] = 1.0;
                    artificial[next] = true;
                    next += 1;
                    next - 1
                }
            };
            basis[i] = identity_col;
            row_meta.push(RowMeta {
                origin: row.origin,
                flipped,
                identity_col,
            });
        }
        debug_assert_eq!(next, width);

        let mut is_basic = vec![false; width];
        for &b in &basis {
            is_basic[b] = true;
        }
        let mut tableau = Tableau {
            m,
            width,
            data,
            obj: vec![0.0; width + 1],
            basis,
            is_basic,
            artificial,
            row_meta,
            max_abs_rhs,
        };
        let mut full_cost = vec![0.0; width];
        full_cost[..nstruct].copy_from_slice(cost);
        tableau.set_costs(&full_cost);
        tableau
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn has_artificials(&self) -> bool {
        self.basis.iter().any(|&b| self.artificial[b])
    }

    fn set_phase_one_costs(&mut self) {
        let cost: Vec<f64> = self
            .artificial
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect();
        self.set_costs(&cost);
    }

    /// Recompute the reduced-cost row for a cost vector over all columns (missing entries are 0).
    fn set_costs(&mut self, cost: &[f64]) {
        let stride = self.stride();
        let mut obj = vec![0.0; stride];
        obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                let row = &self.data[i * stride..(i + 1) * stride];
                for (o, a) in obj.iter_mut().zip(row) {
                    *o -= cb * a;
                }
            }
        }
        self.obj = obj;
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.width]
    }

    fn column_values(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.width];
        for i in 0..self.m {
            values[self.basis[i]] = self.rhs(i).max(0.0);
        }
        values
    }

    fn choose_entering(&self, tol: &Tolerances, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.width {
            if self.is_basic[j] || self.artificial[j] {
                continue;
            }
            let d = self.obj[j];
            if d < -tol.optimality {
                if bland {
                    return Some(j);
                }
                match best {
                    Some((_, bd)) if d >= bd => {}
                    _ => best = Some((j, d)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn choose_leaving(&self, q: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        let eps = 1e-12 * (1.0 + br.abs());
                        if ratio < br - eps
                            || (ratio <= br + eps && self.basis[i] < self.basis[bi])
                        {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let stride = self.stride();
        let piv = self.data[r * stride + q];
        {
            let row = &mut self.data[r * stride..(r + 1) * stride];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[r * stride..(r + 1) * stride].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.data[i * stride..(i + 1) * stride];
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[q] = 0.0;
                let rhs = &mut row[stride - 1];
                if *rhs < 0.0 && *rhs > -1e-11 {
                    *rhs = 0.0;
                }
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[q] = 0.0;
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = q;
        self.is_basic[q] = true;
    }

    fn run(
        &mut self,
        tol: &Tolerances,
        max_iterations: u64,
        iterations: &mut u64,
        deadline: Instant,
    ) -> RunOutcome {
        let mut degenerate_run = 0u32;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some(q) = self.choose_entering(tol, bland) else {
                return RunOutcome::Optimal;
            };
            let Some(r) = self.choose_leaving(q) else {
                return RunOutcome::Unbounded;
            };
            if *iterations >= max_iterations {
                return RunOutcome::Limit;
            }
            if *iterations % 64 == 0 && Instant::now() >= deadline {
                return RunOutcome::Limit;
            }
            let step = self.rhs(r).max(0.0) / self.at(r, q);
            if step <= tol.feasibility {
                degenerate_run = degenerate_run.saturating_add(1);
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
            *iterations += 1;
        }
    }

    /// Pivot remaining zero-level artificials out of the basis where a structural or slack
    /// column can replace them; rows where none can are redundant and keep their artificial.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.artificial[self.basis[r]] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.width {
                if self.is_basic[j] || self.artificial[j] {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                let stride = self.stride();
                self.data[r * stride + self.width] = 0.0;
                self.pivot(r, q);
            }
        }
    }
}
