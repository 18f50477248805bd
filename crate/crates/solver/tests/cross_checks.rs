//! Backends against each other, against HiGHS reading our LP files, and against duality.

use std::ffi::CString;

use adaptagg_solver::lpfile::{parse_lp_str, write_lp_string};
use adaptagg_solver::verify::{check_feasibility, dual_signs_valid, lagrangian_bound};
use adaptagg_solver::{
    Backend, HighsBackend, ObjectiveSense, Problem, ReferenceBackend, RowSense, SolveRequest,
    Status, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Boxed LP or integer program that is feasible at a random anchor point.
fn random_problem(seed: u64, integer: bool) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(1..=8);
    let sense = if rng.gen_bool(0.5) { ObjectiveSense::Minimize } else { ObjectiveSense::Maximize };
    let mut p = Problem::new(format!("rand{seed}"), sense);
    let mut anchor = Vec::new();
    for j in 0..n {
        let lower = rng.gen_range(-3..=0) as f64;
        let upper = lower + rng.gen_range(1..=8) as f64;
        p.add_variable(format!("x{j}"), lower, upper, rng.gen_range(-6.0..6.0), integer);
        anchor.push(if integer { rng.gen_range(lower as i32..=upper as i32) as f64 } else { rng.gen_range(lower..upper) });
    }
    for i in 0..m {
        let terms: Vec<_> = (0..n).map(|j| (VarId(j), rng.gen_range(-4..=4) as f64)).filter(|t| t.1 != 0.0).collect();
        if terms.is_empty() {
            continue;
        }
        let at: f64 = terms.iter().map(|&(v, a)| a * anchor[v.0]).sum();
        let slack = if integer { rng.gen_range(0..=3) as f64 } else { rng.gen_range(0.0..2.0) };
        let (sense, rhs) = match rng.gen_range(0..6) {
            0 => (RowSense::Eq, at),
            1 | 2 => (RowSense::Ge, at - slack),
            _ => (RowSense::Le, at + slack),
        };
        p.add_constraint(format!("c{i}"), terms, sense, rhs);
    }
    p
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_backends_agree_and_solutions_are_feasible(seed in any::<u64>()) {
        let p = random_problem(seed, false);
        let reference = ReferenceBackend.solve(&SolveRequest::new(&p)).unwrap();
        let highs = HighsBackend::default().solve(&SolveRequest::new(&p)).unwrap();
        prop_assert_eq!(reference.status, Status::Optimal);
        prop_assert_eq!(highs.status, Status::Optimal);
        prop_assert!(close(reference.objective.unwrap(), highs.objective.unwrap()),
            "{:?} vs {:?}", reference.objective, highs.objective);
        for out in [&reference, &highs] {
            prop_assert!(check_feasibility(&p, out.primal.as_ref().unwrap()).is_feasible(1e-7));
        }
    }

    #[test]
    fn lp_duals_give_a_valid_bound(seed in any::<u64>()) {
        let p = random_problem(seed, false);
        for backend in [&ReferenceBackend as &dyn Backend, &HighsBackend::default()] {
            let out = backend.solve(&SolveRequest::new(&p)).unwrap();
            let duals = out.duals.expect("LP solves report duals");
            prop_assert!(dual_signs_valid(&p, &duals, 1e-7), "{}: {duals:?}", backend.name());
            let bound = lagrangian_bound(&p, &duals, 1e-9);
            let obj = out.objective.unwrap();
            // Weak duality, tight at an optimum.
            prop_assert!(close(bound, obj), "{}: bound {bound} objective {obj}", backend.name());
        }
    }

    #[test]
    fn milp_incumbent_never_beats_its_bound(seed in any::<u64>()) {
        let p = random_problem(seed, true);
        let mut objectives = Vec::new();
        for backend in [&ReferenceBackend as &dyn Backend, &HighsBackend::default()] {
            let out = backend.solve(&SolveRequest::new(&p)).unwrap();
            prop_assert!(out.status.has_solution(), "{}: {:?}", backend.name(), out.status);
            let x = out.primal.as_ref().unwrap();
            let report = check_feasibility(&p, x);
            prop_assert!(report.is_feasible(1e-7) && report.max_integrality_violation <= 1e-6);
            let (obj, bound) = (out.objective.unwrap(), out.best_bound.unwrap());
            let slack = 1e-6 * obj.abs().max(1.0);
            match p.sense {
                ObjectiveSense::Minimize => prop_assert!(obj >= bound - slack, "{obj} < {bound}"),
                ObjectiveSense::Maximize => prop_assert!(obj <= bound + slack, "{obj} > {bound}"),
            }
            objectives.push(obj);
        }
        // Both stop within the default relative gap of the same optimum.
        prop_assert!((objectives[0] - objectives[1]).abs() <= 2e-4 * objectives[0].abs().max(1.0));
    }

    #[test]
    fn lp_text_round_trips(seed in any::<u64>(), integer in any::<bool>()) {
        let p = random_problem(seed, integer);
        let text = write_lp_string(&p).unwrap();
        let back = parse_lp_str(&text).unwrap();
        prop_assert_eq!(write_lp_string(&back).unwrap(), text);
        let a = HighsBackend::default().solve(&SolveRequest::new(&p)).unwrap().objective.unwrap();
        let b = HighsBackend::default().solve(&SolveRequest::new(&back)).unwrap().objective.unwrap();
        prop_assert!(close(a, b));
    }
}

/// Solve an LP file with the HiGHS reader, bypassing our parser and adapter entirely.
fn highs_read_and_solve(path: &std::path::Path) -> f64 {
    let file = CString::new(path.to_str().unwrap()).unwrap();
    let quiet = CString::new("output_flag").unwrap();
    // SAFETY: the handle is created, used and destroyed on this thread only.
    unsafe {
        let h = highs_sys::Highs_create();
        highs_sys::Highs_setBoolOptionValue(h, quiet.as_ptr(), 0);
        assert_eq!(highs_sys::Highs_readModel(h, file.as_ptr()), 0, "HiGHS rejected the file");
        highs_sys::Highs_run(h);
        assert_eq!(highs_sys::Highs_getModelStatus(h), highs_sys::kHighsModelStatusOptimal);
        let obj = highs_sys::Highs_getObjectiveValue(h);
        highs_sys::Highs_destroy(h);
        obj
    }
}

#[test]
fn exported_files_are_read_identically_by_highs() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..40 {
        let p = random_problem(seed, seed % 2 == 1);
        let path = dir.path().join(format!("p{seed}.lp"));
        adaptagg_solver::lpfile::export_lp_file(&p, &path).unwrap();
        let ours = HighsBackend::default().solve(&SolveRequest::new(&p)).unwrap().objective.unwrap();
        let theirs = highs_read_and_solve(&path);
        let tol = if p.has_integers() { 2e-4 } else { 1e-6 };
        assert!((ours - theirs).abs() <= tol * ours.abs().max(1.0), "seed {seed}: {ours} vs {theirs}");
    }
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let mut p = Problem::new("infeasible", ObjectiveSense::Minimize);
    let x = p.add_variable("x", 0.0, 1.0, 1.0, false);
    p.add_constraint("c", vec![(x, 1.0)], RowSense::Ge, 2.0);
    let mut q = Problem::new("unbounded", ObjectiveSense::Maximize);
    let y = q.add_variable("y", 0.0, f64::INFINITY, 1.0, false);
    q.add_constraint("c", vec![(y, 1.0)], RowSense::Ge, 1.0);
    for backend in [&ReferenceBackend as &dyn Backend, &HighsBackend::default()] {
        assert_eq!(backend.solve(&SolveRequest::new(&p)).unwrap().status, Status::Infeasible);
        let s = backend.solve(&SolveRequest::new(&q)).unwrap().status;
        assert_eq!(s, Status::Unbounded, "{}", backend.name());
    }
}
