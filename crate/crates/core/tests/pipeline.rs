use armreach::arm::ArmDesign;
use armreach::attain::{analyze, AnalysisSettings, Task};
use armreach::config::{AnalysisKind, ExperimentSpec};
use armreach::harness::{loads_for, run_battery, shape_label, shape_plan, BatteryOptions, ShapePlanOptions};
use armreach::lie::Wrench;
use armreach::search::{search_attainability, SearchSettings, ShapeErrorWeights};
use armreach::statics::{solve_equilibrium, SolveSettings};

#[test]
fn forward_solution_is_attainable_and_found_by_search() {
    let d = ArmDesign::antagonistic();
    let p = [30e3, 10e3, 5e3, 25e3];
    let q = Wrench::new(2.0, -3.0, 0.2);
    let eq = solve_equilibrium(&d, &p, &q, None, &SolveSettings { tolerance: 1e-10, ..Default::default() }).unwrap();
    assert!(eq.converged);
    let task = Task::new(eq.shape.clone(), q);
    let r = analyze(&d, &task, &AnalysisSettings::default()).unwrap();
    assert!(r.attainable);
    assert!(r.absolute_unattainability < 1e-6 && r.relative_unattainability < 1e-6);
    let s = search_attainability(
        &d,
        &task,
        &ShapeErrorWeights::identity(d.segments),
        &SearchSettings { parallel: false, ..Default::default() },
    )
    .unwrap();
    assert!(s.s < 1e-4, "s = {}", s.s);
}

#[test]
fn warm_start_converges_quickly() {
    let d = ArmDesign::antagonistic();
    let p = [20e3, 0.0, 10e3, 15e3];
    let q = Wrench::new(1.0, 1.0, 0.0);
    let s = SolveSettings::default();
    let first = solve_equilibrium(&d, &p, &q, None, &s).unwrap();
    let again = solve_equilibrium(&d, &p, &q, Some(&first.shape), &s).unwrap();
    assert!(again.converged && again.iterations <= 2);
}

#[test]
fn battery_totals_equal_independent_analyses() {
    let spec = ExperimentSpec::from_str(
        "designs = [\"antagonistic\", \"muscle_only\"]\nseed = 4\n[[task_shapes]]\nkind = \"named\"\nname = \"tip_curl\"\n[loads]\ncount = 5\nranges = [3.0, 3.0, 0.3]\n",
        "inline",
    )
    .unwrap();
    assert_eq!(spec.analysis, AnalysisKind::Hull);
    let designs = spec.resolve_designs(std::path::Path::new(".")).unwrap();
    let shapes: Vec<_> = spec.task_shapes.iter().enumerate().map(|(k, s)| (shape_label(s, k), s.clone())).collect();
    let loads = loads_for(&spec.loads, spec.seed);
    let b = run_battery(&designs, &shapes, &loads, &BatteryOptions { seed: spec.seed, ..Default::default() }).unwrap();
    let mut sum = 0.0;
    for d in &designs {
        let shape = spec.task_shapes[0].build(d.segments).unwrap();
        for q in &loads {
            let t = Task::with_consistent_shear(d, &shape, *q).unwrap();
            sum += analyze(d, &t, &AnalysisSettings::default()).unwrap().absolute_unattainability;
        }
    }
    let total: f64 = b.cells.iter().map(|c| c.absolute).sum();
    assert!((total - sum).abs() <= 1e-12 * (1.0 + sum));
}

#[test]
fn oracle_shape_ranks_first_in_plan() {
    let d = ArmDesign::antagonistic();
    let q = Wrench::new(7.0, 0.0, 0.0);
    let eq = solve_equilibrium(
        &d,
        &[35e3, 5e3, 0.0, 20e3],
        &q,
        None,
        &SolveSettings { tolerance: 1e-10, ..Default::default() },
    )
    .unwrap();
    assert!(eq.converged);
    let tip = eq.shape.tip();
    let mut cands = armreach::harness::plan_candidates(d.segments, &tip);
    cands.push(eq.shape.clone());
    let plan =
        shape_plan(&d, &tip, &cands, &ShapePlanOptions { consistent_shear: false, ..Default::default() }).unwrap();
    let best = plan.ranked()[0];
    assert_eq!(best.index, cands.len() - 1);
    assert!(best.absolute < 1e-6);
}
