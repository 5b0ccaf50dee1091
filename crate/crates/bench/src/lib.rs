//! Shared fixtures for the criterion benches.

use drocp_core::{
    build_grid, builtin_problem, BuiltinProblem, NodeMatrix, ProblemCase, ProblemSpec, TimeGrid, TrajectoryPair,
};

pub struct Fixture {
    pub spec: ProblemSpec,
    pub grid: TimeGrid,
    pub gamma: f64,
    /// Ramps in every component, far from the constraint set.
    pub point: TrajectoryPair,
}

pub fn fixture(problem: BuiltinProblem, case: ProblemCase, n_steps: usize) -> Fixture {
    let (spec, gamma) = builtin_problem(problem, case);
    let grid = build_grid(spec.t0(), spec.tf(), n_steps).expect("valid grid");
    let nodes = grid.n_nodes();
    let s = |k: usize| k as f64 / n_steps as f64;
    let x = NodeMatrix::from_fn(nodes, spec.state_dim(), |k, i| s(k) * (i + 1) as f64);
    let u = NodeMatrix::from_fn(nodes, spec.control_dim(), |k, j| 1.0 - s(k) * (j + 1) as f64);
    let point = TrajectoryPair::new(x, u).expect("matching node counts");
    Fixture { spec, grid, gamma, point }
}
