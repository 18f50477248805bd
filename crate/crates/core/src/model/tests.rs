use adaptagg_solver::{
    lpfile, Backend, HighsBackend, Limits, ReferenceBackend, SolveOutcome, SolveStats, Status,
    Tolerances,
};
use indexmap::IndexMap;
use proptest::prelude::*;

use super::*;
use crate::clustering::{AggregationResult, Representative};
use crate::timeseries::{synthesize, HorizonData, SynthConfig, SynthHorizon, TimeSlice};

fn toy(hours: u32, base_load: f64, seed: u64) -> HorizonData {
    let cfg = SynthConfig {
        horizon: SynthHorizon::Hours(hours),
        base_load_mw: base_load,
        ..Default::default()
    };
    synthesize(&cfg, seed).unwrap()
}

fn policy(r: f64) -> Policy {
    Policy::new(r).unwrap()
}

fn solve(instance: &EsomInstance, backend: &dyn Backend) -> PlanSolution {
    let tol = Tolerances {
        mip_relative_gap: 1e-9,
        ..Default::default()
    };
    instance.solve(backend, tol, Limits::default()).unwrap().0
}

fn whole(data: &HorizonData) -> TimeSlice {
    TimeSlice {
        index: 0,
        offset: 0,
        length: data.hours(),
    }
}

#[test]
fn linear_week_has_expected_variable_count() {
    let cat = TechCatalog::baseline(Variant::Linear);
    let inst = build_full(&toy(168, 100.0, 1), &cat, policy(0.5), Variant::Linear, BuildOptions::default()).unwrap();
    // 2 renewable capacities, energy and power capacity, then four series per hour.
    assert_eq!(inst.problem.num_variables(), 2 + 2 + 168 * 4);
    assert_eq!(inst.problem.num_integer(), 0);

    let two = build_full(&toy(2, 100.0, 1), &cat, policy(0.5), Variant::Linear, BuildOptions::default()).unwrap();
    let mut names: Vec<&str> = two.problem.variables.iter().map(|v| v.name.as_str()).collect();
    names.sort_unstable();
    assert_eq!(
        names,
        vec![
            "cap_solar", "cap_wind", "cha_battery_b0_t0", "cha_battery_b0_t1", "curt_b0_t0",
            "curt_b0_t1", "dis_battery_b0_t0", "dis_battery_b0_t1", "ene_battery", "pow_battery",
            "soc_battery_b0_t0", "soc_battery_b0_t1",
        ]
    );
}

#[test]
fn integrality_marks_only_commitment_and_units() {
    let cat = TechCatalog::baseline(Variant::Integer);
    let inst = build_full(&toy(2, 500.0, 1), &cat, policy(0.5), Variant::Integer, BuildOptions::default()).unwrap();
    let mut flagged: Vec<&str> = inst
        .problem
        .variables
        .iter()
        .filter(|v| v.integer)
        .map(|v| v.name.as_str())
        .collect();
    flagged.sort_unstable();
    assert_eq!(
        flagged,
        vec![
            "dn_thermal_b0_t0", "dn_thermal_b0_t1", "on_thermal_b0_t0", "on_thermal_b0_t1",
            "units_thermal", "up_thermal_b0_t0", "up_thermal_b0_t1",
        ]
    );
}

#[test]
fn variant_mismatch_is_rejected() {
    let data = toy(24, 100.0, 1);
    let err = build_full(&data, &TechCatalog::baseline(Variant::Integer), policy(0.5), Variant::Linear, BuildOptions::default());
    assert!(matches!(err, Err(ModelError::VariantMismatch { thermal: 1, .. })));
    let err = build_full(&data, &TechCatalog::baseline(Variant::Linear), policy(0.5), Variant::Integer, BuildOptions::default());
    assert!(matches!(err, Err(ModelError::VariantMismatch { thermal: 0, .. })));
}

#[test]
fn zero_demand_costs_nothing() {
    let d = toy(24, 100.0, 3);
    let zero = HorizonData::new(d.start(), vec![0.0; 24], d.profiles().clone()).unwrap();
    for variant in [Variant::Linear, Variant::Integer] {
        let cat = TechCatalog::baseline(variant);
        let inst = build_full(&zero, &cat, policy(0.5), variant, BuildOptions::default()).unwrap();
        for backend in [&HighsBackend::default() as &dyn Backend, &ReferenceBackend] {
            let plan = solve(&inst, backend);
            assert_eq!(plan.objective, 0.0);
            assert!(plan.capacities.feature_vector().iter().all(|&c| c == 0.0));
        }
        let slice = build_slice(&zero, whole(&zero), &cat, policy(0.5), variant, BuildOptions::default()).unwrap();
        assert_eq!(solve(&slice, &HighsBackend::default()).objective, 0.0);
    }
}

#[test]
fn whole_horizon_slice_matches_full_model() {
    let data = toy(48, 300.0, 5);
    for variant in [Variant::Linear, Variant::Integer] {
        let cat = TechCatalog::baseline(variant);
        let full = build_full(&data, &cat, policy(0.6), variant, BuildOptions::default()).unwrap();
        let slice = build_slice(&data, whole(&data), &cat, policy(0.6), variant, BuildOptions::default()).unwrap();
        assert_eq!(slice.fixed_cost_scale, 1.0);
        assert_eq!(full.problem.variables, slice.problem.variables);
        assert_eq!(full.problem.constraints, slice.problem.constraints);
    }
}

#[test]
fn identical_weeks_give_identical_instances() {
    let week = toy(168, 200.0, 9);
    let twice = |s: &[f64]| [s, s].concat();
    let profiles: IndexMap<_, _> = week.profiles().iter().map(|(k, v)| (k.clone(), twice(v))).collect();
    let data = HorizonData::new(week.start(), twice(week.load()), profiles).unwrap();
    let cat = TechCatalog::baseline(Variant::Linear);
    let build = |index| {
        let s = TimeSlice { index, offset: index * 168, length: 168 };
        build_slice(&data, s, &cat, policy(0.5), Variant::Linear, BuildOptions::default()).unwrap()
    };
    let (a, b) = (build(0), build(1));
    assert_eq!(a.problem.variables, b.problem.variables);
    assert_eq!(a.problem.constraints, b.problem.constraints);
    let backend = HighsBackend::default();
    assert_eq!(solve(&a, &backend).capacities, solve(&b, &backend).capacities);
}

fn single_cluster(rep: usize, weight: u32) -> AggregationResult {
    AggregationResult {
        slice_hours: 24,
        slice_count: weight as usize,
        assignments: vec![0; weight as usize],
        representatives: vec![Representative::Slice { index: rep }],
        weights: vec![weight],
        method: None,
    }
}

#[test]
fn single_cluster_reduced_model_scales_costs() {
    let data = toy(96, 300.0, 2);
    let cat = TechCatalog::baseline(Variant::Integer);
    let reduced = build_reduced(&data, &single_cluster(2, 4), &cat, policy(0.5), Variant::Integer, BuildOptions::default()).unwrap();
    let slice = TimeSlice { index: 2, offset: 48, length: 24 };
    let one = build_slice(&data, slice, &cat, policy(0.5), Variant::Integer, BuildOptions::default()).unwrap();
    assert_eq!(one.fixed_cost_scale, 0.25);
    assert_eq!(reduced.problem.constraints.len(), one.problem.constraints.len());
    assert_eq!(reduced.problem.constraints[..reduced.problem.constraints.len() - 1], one.problem.constraints[..one.problem.constraints.len() - 1]);
    let capacities = 2 + 2 + 1;
    for (j, (r, s)) in reduced.problem.variables.iter().zip(&one.problem.variables).enumerate() {
        let expected = if j < capacities { s.cost / 0.25 } else { s.cost * 4.0 };
        assert!((r.cost - expected).abs() <= 1e-9 * expected.abs(), "{}", r.name);
    }
    // Portfolio row: four weighted copies of the representative's demand.
    let rps = &reduced.problem.constraints[reduced.rps_row.unwrap()];
    let demand: f64 = data.load()[48..72].iter().sum();
    assert!((rps.rhs - 0.5 * 4.0 * demand).abs() < 1e-9 * demand);
}

#[test]
fn weighted_portfolio_right_hand_side() {
    let data = toy(96, 300.0, 4);
    let cat = TechCatalog::baseline(Variant::Integer);
    let agg = AggregationResult {
        slice_hours: 24,
        slice_count: 4,
        assignments: vec![0, 0, 1, 0],
        representatives: vec![Representative::Slice { index: 0 }, Representative::Slice { index: 2 }],
        weights: vec![3, 1],
        method: None,
    };
    let inst = build_reduced(&data, &agg, &cat, policy(0.7), Variant::Integer, BuildOptions::default()).unwrap();
    let rps = &inst.problem.constraints[inst.rps_row.unwrap()];
    let l = data.load();
    let demand = 3.0 * l[0..24].iter().sum::<f64>() + l[48..72].iter().sum::<f64>();
    assert!((rps.rhs - 0.3 * demand).abs() <= 1e-9 * demand);
    assert_eq!(rps.terms.len(), 48);
    assert!(rps.terms[..24].iter().all(|&(_, a)| a == 3.0));

    let bad = AggregationResult { weights: vec![2, 1], ..agg };
    assert!(matches!(
        build_reduced(&data, &bad, &cat, policy(0.7), Variant::Integer, BuildOptions::default()),
        Err(ModelError::InconsistentAggregation(_))
    ));
}

fn outcome_at(inst: &EsomInstance, x: Vec<f64>) -> SolveOutcome {
    SolveOutcome {
        status: Status::Optimal,
        objective: Some(inst.problem.objective_value(&x)),
        primal: Some(x),
        duals: None,
        best_bound: None,
        gap: None,
        stats: SolveStats::default(),
    }
}

#[test]
fn cost_terms_from_primal_values() {
    let cat = TechCatalog::baseline(Variant::Integer);
    let inst = build_full(&toy(4, 100.0, 1), &cat, policy(0.0), Variant::Integer, BuildOptions::default()).unwrap();
    let n = inst.problem.num_variables();
    let plan = extract_costs(&inst, &outcome_at(&inst, vec![0.0; n])).unwrap();
    assert_eq!(plan.costs, CostBreakdown::default());

    let mut x = vec![0.0; n];
    for &g in &inst.vars.blocks[0].thermal_output[0] {
        x[g.index()] = 25.0;
    }
    let plan = extract_costs(&inst, &outcome_at(&inst, x.clone())).unwrap();
    assert_eq!(plan.costs.thermal_operation, 3000.0);

    let mut wrong = outcome_at(&inst, x);
    wrong.objective = Some(2999.0);
    assert!(matches!(extract_costs(&inst, &wrong), Err(ModelError::CostMismatch { .. })));
    let none = SolveOutcome { status: Status::Infeasible, primal: None, objective: None, ..wrong };
    assert!(matches!(extract_costs(&inst, &none), Err(ModelError::NoSolution(Status::Infeasible))));
}

#[test]
fn solved_plans_pass_the_audit() {
    let data = toy(72, 400.0, 11);
    for (variant, r) in [(Variant::Linear, 0.0), (Variant::Integer, 0.5), (Variant::Integer, 0.9)] {
        let cat = TechCatalog::baseline(variant);
        for opts in [BuildOptions::default(), BuildOptions { soc_boundary: SocBoundary::Empty, ..Default::default() }] {
            let inst = build_full(&data, &cat, policy(r), variant, opts).unwrap();
            let plan = solve(&inst, &HighsBackend::default());
            let report = audit(&inst, &plan);
            assert!(report.violations(1e-6).is_empty(), "{variant} R={r}: {:?}", report.violations(1e-6));
        }
    }
}

#[test]
fn empty_start_costs_at_least_cyclic() {
    // Starting empty only removes freedom compared with the cyclic boundary.
    let data = toy(48, 300.0, 8);
    let cat = TechCatalog::baseline(Variant::Linear);
    let solve_with = |soc_boundary| {
        let opts = BuildOptions { soc_boundary, ..Default::default() };
        let inst = build_full(&data, &cat, policy(0.0), Variant::Linear, opts).unwrap();
        solve(&inst, &HighsBackend::default()).objective
    };
    assert!(solve_with(SocBoundary::Empty) >= solve_with(SocBoundary::Cyclic) * (1.0 - 1e-9));
}

#[test]
fn exported_instance_round_trips() {
    let cat = TechCatalog::baseline(Variant::Integer);
    let inst = build_full(&toy(12, 300.0, 1), &cat, policy(0.5), Variant::Integer, BuildOptions::default()).unwrap();
    let text = lpfile::write_lp_string(&inst.problem).unwrap();
    assert_eq!(lpfile::parse_lp_str(&text).unwrap(), inst.problem);
}

#[test]
fn stricter_standard_never_lowers_cost() {
    let data = toy(48, 400.0, 21);
    let cat = TechCatalog::baseline(Variant::Integer);
    let mut last = f64::NEG_INFINITY;
    for r in [0.0, 0.25, 0.5, 0.75, 0.9] {
        let inst = build_full(&data, &cat, policy(r), Variant::Integer, BuildOptions::default()).unwrap();
        let cost = solve(&inst, &HighsBackend::default()).objective;
        assert!(cost >= last - 1e-6 * cost.abs(), "R={r}: {cost} < {last}");
        last = cost;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn recomputed_cost_matches_solver(seed in 0u64..1000, hours in 6u32..30, load in 10.0f64..500.0) {
        let data = toy(hours, load, seed);
        let cat = TechCatalog::baseline(Variant::Linear);
        let inst = build_full(&data, &cat, policy(0.0), Variant::Linear, BuildOptions::default()).unwrap();
        let outcome = HighsBackend::default().solve(&adaptagg_solver::SolveRequest::new(&inst.problem)).unwrap();
        let plan = extract_costs(&inst, &outcome).unwrap();
        let reported = outcome.objective.unwrap();
        prop_assert!((plan.costs.total() - reported).abs() <= 1e-6 * reported.abs().max(1.0));
    }
}
