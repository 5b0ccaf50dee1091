use drocp_core::duals::{detect_junctions, ActiveTolerance};
use drocp_core::harness::{analyze, gamma_sweep};
use drocp_core::{build_grid, builtin_problem, BuiltinProblem, DrSettings, DrSolver, ProblemCase, Termination};

#[test]
fn oscillator_controls_each_have_a_junction() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
    let grid = build_grid(spec.t0(), spec.tf(), 1000).unwrap();
    let out = DrSolver::new(&spec, &grid).unwrap().solve(&DrSettings::new(gamma)).unwrap();
    let junctions = detect_junctions(&out.solution.u, spec.control_bounds(), ActiveTolerance::default());
    for j in 0..2 {
        let attained = out.solution.u.component(j).iter().any(|u| {
            ActiveTolerance::default().side(spec.control_bounds(), j, *u).is_some()
        });
        assert!(attained, "control {j} never saturates");
        assert!(junctions.iter().any(|p| p.control_index == j), "no junction for control {j}");
    }
    for p in &junctions {
        assert_eq!(p.node_index.abs_diff(p.saturated_node), 1);
    }
}

#[test]
fn state_constrained_oscillator_adjoint_away_from_junctions() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case2);
    let grid = build_grid(spec.t0(), spec.tf(), 1000).unwrap();
    let solver = DrSolver::new(&spec, &grid).unwrap();
    let out = solver.solve(&DrSettings::new(gamma)).unwrap();
    let a = analyze(&out, solver.system(), &spec, ActiveTolerance::default()).unwrap();
    assert!(a.kkt.adjoint.windowed < 0.1, "{:?}", a.kkt.adjoint);
    assert!(a.multipliers.is_nonnegative());
    assert!(a.kkt.complementarity <= 1e-8);
    // The lower bound on x1 is the only state bound and it is hit.
    assert!(a.multipliers.mu2.component(0).iter().any(|m| *m > 0.0));
    assert!(a.multipliers.mu1.max_abs() == 0.0);
}

#[test]
fn scaled_costate_gives_the_same_recovery() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Psm, ProblemCase::Case1);
    let grid = build_grid(spec.t0(), spec.tf(), 1000).unwrap();
    let solver = DrSolver::new(&spec, &grid).unwrap();
    let mut out = solver.solve(&DrSettings::new(gamma)).unwrap();
    let base = analyze(&out, solver.system(), &spec, ActiveTolerance::default()).unwrap();
    out.costate_dr = out.costate_dr.scaled(-7.5);
    let scaled = analyze(&out, solver.system(), &spec, ActiveTolerance::default()).unwrap();
    assert!(scaled.costate.lambda.max_abs_diff(&base.costate.lambda) <= 1e-12);
}

#[test]
fn oscillator_sweep_minimum_is_near_tabulated_gamma() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
    let grid = build_grid(spec.t0(), spec.tf(), 200).unwrap();
    let rows = gamma_sweep(&spec, &grid, 50, 1e-8, 200).unwrap();
    let best = rows
        .iter()
        .filter(|r| r.terminated_by == Some(Termination::ToleranceMet))
        .min_by_key(|r| r.iterations.unwrap())
        .unwrap();
    assert!((best.gamma - gamma).abs() <= 0.15, "fastest gamma {} ({} iterations)", best.gamma, best.iterations.unwrap());
}

#[test]
fn state_constrained_sweep_never_converges() {
    let (spec, _) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case2);
    let grid = build_grid(spec.t0(), spec.tf(), 200).unwrap();
    let rows = gamma_sweep(&spec, &grid, 20, 1e-8, 200).unwrap();
    for r in &rows {
        assert_eq!(r.terminated_by, Some(Termination::IterationCap), "gamma {}", r.gamma);
        assert_eq!(r.iterations, Some(200));
    }
}
