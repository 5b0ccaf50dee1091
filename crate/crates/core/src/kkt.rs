//! Grid-level residuals of the optimality conditions: control law, adjoint
//! equation and complementarity.

use serde::{Deserialize, Serialize};

use crate::duals::{adjoint_defect, costate_gain};
use crate::error::{Error, Result};
use crate::model::{Bounds, CostateTrajectory, MultiplierPair, SampledSystem, TrajectoryPair};

/// Half-width of the node window excluded around junctions.
pub const JUNCTION_WINDOW: usize = 3;

fn check_costate(lam: &CostateTrajectory, nodes: usize, n: usize) -> Result<()> {
    if lam.lambda.nodes() != nodes || lam.lambda.dim() != n {
        return Err(Error::shape(
            "costate",
            format!("{nodes}x{n}"),
            format!("{}x{}", lam.lambda.nodes(), lam.lambda.dim()),
        ));
    }
    Ok(())
}

/// Per control component, `max_k |clamp(−b_jᵀλ/r_j) − u_j|`.
pub fn control_law_residual(
    solution: &TrajectoryPair,
    lam: &CostateTrajectory,
    sys: &SampledSystem,
    control_bounds: &Bounds,
) -> Result<Vec<f64>> {
    let nodes = sys.grid().n_nodes();
    let m = sys.control_dim();
    solution.check_shape(nodes, sys.state_dim(), m)?;
    check_costate(lam, nodes, sys.state_dim())?;
    if control_bounds.dim() != m {
        return Err(Error::shape("control bounds", m, control_bounds.dim()));
    }
    let mut out = vec![0.0_f64; m];
    for k in 0..nodes {
        for (j, worst) in out.iter_mut().enumerate() {
            let predicted = control_bounds.clamp(j, -costate_gain(sys, &lam.lambda, j, k) / sys.r(k)[j]);
            *worst = worst.max((predicted - solution.u.get(k, j)).abs());
        }
    }
    Ok(out)
}

fn slack_product(mu: f64, slack: f64) -> f64 {
    if slack.is_finite() {
        (mu * slack).abs()
    } else if mu == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Largest of `|μ¹(x − x̄)|`, `|μ²(x̲ − x)|` and any negative multiplier part.
pub fn complementarity_residual(solution: &TrajectoryPair, mu: &MultiplierPair, state_bounds: &Bounds) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..solution.x.nodes() {
        for i in 0..solution.x.dim() {
            let x = solution.x.get(k, i);
            let (m1, m2) = (mu.mu1.get(k, i), mu.mu2.get(k, i));
            worst = worst
                .max(slack_product(m1, x - state_bounds.upper[i]))
                .max(slack_product(m2, state_bounds.lower[i] - x))
                .max((-m1).max(0.0))
                .max((-m2).max(0.0));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointResidual {
    /// Over all interior nodes.
    pub all: f64,
    /// Over interior nodes farther than the window from every junction.
    pub windowed: f64,
}

/// `max_k ‖λ̇ + Qx + Aᵀλ + μ¹ − μ²‖∞` over interior nodes with central
/// differences, also with `±window` nodes around each `junctions` entry
/// left out.
pub fn adjoint_residual(
    solution: &TrajectoryPair,
    lam: &CostateTrajectory,
    mu: &MultiplierPair,
    sys: &SampledSystem,
    junctions: &[usize],
    window: usize,
) -> Result<AdjointResidual> {
    let nodes = sys.grid().n_nodes();
    let n = sys.state_dim();
    solution.check_shape(nodes, n, sys.control_dim())?;
    check_costate(lam, nodes, n)?;
    if !mu.mu1.same_shape(&lam.lambda) || !mu.mu2.same_shape(&lam.lambda) {
        return Err(Error::shape("multipliers", format!("{nodes}x{n}"), format!("{}x{}", mu.mu1.nodes(), mu.mu1.dim())));
    }
    let defect = adjoint_defect(&solution.x, &lam.lambda, sys);
    let mut excluded = vec![false; nodes];
    for &j in junctions {
        for k in j.saturating_sub(window)..=(j + window).min(nodes - 1) {
            excluded[k] = true;
        }
    }
    let mut res = AdjointResidual { all: 0.0, windowed: 0.0 };
    for k in 1..nodes - 1 {
        let local = (0..n)
            .map(|i| (mu.mu1.get(k, i) - mu.mu2.get(k, i) - defect.get(k, i)).abs())
            .fold(0.0, f64::max);
        res.all = res.all.max(local);
        if !excluded[k] {
            res.windowed = res.windowed.max(local);
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{build_grid, DiagonalFn, MatrixFn, NodeMatrix, ProblemSpec};

    fn scalar(q: f64, n_steps: usize) -> SampledSystem {
        let spec = ProblemSpec::builder(
            MatrixFn::Constant(DenseMatrix::zeros(1, 1)),
            MatrixFn::Constant(DenseMatrix::identity(1)),
        )
        .state_weight(DiagonalFn::Constant(vec![q]))
        .build()
        .unwrap();
        SampledSystem::new(&spec, &build_grid(0.0, 1.0, n_steps).unwrap()).unwrap()
    }

    #[test]
    fn unconstrained_control_law_is_exact() {
        let sys = scalar(1.0, 10);
        let lam = NodeMatrix::from_fn(11, 1, |k, _| (k as f64).sin());
        let pair = TrajectoryPair {
            x: NodeMatrix::zeros(11, 1),
            u: lam.scaled(-1.0),
        };
        let r = control_law_residual(&pair, &CostateTrajectory::new(lam), &sys, &Bounds::unbounded(1)).unwrap();
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn saturated_control_matches_clamp() {
        let sys = scalar(1.0, 4);
        let lam = NodeMatrix::from_fn(5, 1, |_, _| -50.0);
        let pair = TrajectoryPair {
            x: NodeMatrix::zeros(5, 1),
            u: NodeMatrix::from_fn(5, 1, |_, _| 0.1),
        };
        let r = control_law_residual(&pair, &CostateTrajectory::new(lam), &sys, &Bounds::new(vec![-0.4], vec![0.1])).unwrap();
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn control_law_rejects_wrong_costate_shape() {
        let sys = scalar(1.0, 4);
        let pair = TrajectoryPair::zeros(5, 1, 1);
        let lam = CostateTrajectory::new(NodeMatrix::zeros(4, 1));
        assert!(matches!(
            control_law_residual(&pair, &lam, &sys, &Bounds::unbounded(1)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn complementarity_cases() {
        let bounds = Bounds::new(vec![0.0], vec![f64::INFINITY]);
        let on_bound = TrajectoryPair {
            x: NodeMatrix::zeros(3, 1),
            u: NodeMatrix::zeros(3, 1),
        };
        let mut mu = MultiplierPair::zeros(3, 1);
        assert_eq!(complementarity_residual(&on_bound, &mu, &bounds), 0.0);

        mu.mu2.set(1, 0, 1.0);
        assert_eq!(complementarity_residual(&on_bound, &mu, &bounds), 0.0);

        let off_bound = TrajectoryPair {
            x: NodeMatrix::from_fn(3, 1, |_, _| 0.3),
            u: NodeMatrix::zeros(3, 1),
        };
        assert!((complementarity_residual(&off_bound, &mu, &bounds) - 0.3).abs() < 1e-15);

        let mut negative = MultiplierPair::zeros(3, 1);
        negative.mu1.set(0, 0, -0.25);
        assert_eq!(complementarity_residual(&on_bound, &negative, &bounds), f64::INFINITY);
    }

    #[test]
    fn adjoint_zero_case() {
        let sys = scalar(1.0, 6);
        let pair = TrajectoryPair::zeros(7, 1, 1);
        let lam = CostateTrajectory::new(NodeMatrix::zeros(7, 1));
        let r = adjoint_residual(&pair, &lam, &MultiplierPair::zeros(7, 1), &sys, &[], JUNCTION_WINDOW).unwrap();
        assert_eq!(r, AdjointResidual { all: 0.0, windowed: 0.0 });
    }

    #[test]
    fn adjoint_linear_costate() {
        let sys = scalar(1.0, 20);
        let h = sys.grid().step();
        let pair = TrajectoryPair {
            x: NodeMatrix::from_fn(21, 1, |_, _| 1.0),
            u: NodeMatrix::zeros(21, 1),
        };
        let lam = CostateTrajectory::new(NodeMatrix::from_fn(21, 1, |k, _| -(k as f64) * h));
        let r = adjoint_residual(&pair, &lam, &MultiplierPair::zeros(21, 1), &sys, &[], JUNCTION_WINDOW).unwrap();
        assert!(r.all < 1e-12, "{r:?}");
    }

    #[test]
    fn window_hides_a_kink() {
        let sys = scalar(0.0, 20);
        let h = sys.grid().step();
        let lam = CostateTrajectory::new(NodeMatrix::from_fn(21, 1, |k, _| if k <= 10 { 0.0 } else { (k - 10) as f64 * h }));
        let pair = TrajectoryPair::zeros(21, 1, 1);
        let mut mu = MultiplierPair::zeros(21, 1);
        for k in 11..21 {
            mu.mu2.set(k, 0, 1.0);
        }
        let r = adjoint_residual(&pair, &lam, &mu, &sys, &[10], JUNCTION_WINDOW).unwrap();
        assert!((r.all - 0.5).abs() < 1e-12, "{r:?}");
        assert!(r.windowed < 1e-12, "{r:?}");
        let r = adjoint_residual(&pair, &lam, &mu, &sys, &[], JUNCTION_WINDOW).unwrap();
        assert_eq!(r.all, r.windowed);
    }
}
