//! Proximal mapping of the box-constrained quadratic cost.
//!
//! For `f(x,u) = ι_box(x,u) + (β/2)·(xᵀQx + uᵀRu)` the proximal point is
//! separable in time and component: each entry is scaled by `1/(β·w + 1)`
//! (with `w` the matching diagonal weight) and clamped into its bounds.

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, SampledSystem, TrajectoryPair};

/// Objective weight `β > 0` and the equivalent `γ = 1/(1+β) ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParameters {
    beta: f64,
    gamma: f64,
}

impl ProxParameters {
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidSettings(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self {
            beta: (1.0 - gamma) / gamma,
            gamma,
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidSettings(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            beta,
            gamma: 1.0 / (1.0 + beta),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Scalar proximal step: `clamp(v / (β·w + 1), [lo, hi])`.
#[inline]
pub fn prox_scalar(v: f64, beta: f64, weight: f64, lo: f64, hi: f64) -> f64 {
    (v / (beta * weight + 1.0)).max(lo).min(hi)
}

/// Proximal mapping of `f` on a sampled system. The output lies in the box.
pub fn prox_f_sampled(z: &TrajectoryPair, params: ProxParameters, sys: &SampledSystem, spec: &ProblemSpec) -> Result<TrajectoryPair> {
    let nodes = sys.grid().n_nodes();
    let (n, m) = (sys.state_dim(), sys.control_dim());
    z.check_shape(nodes, n, m)?;
    let mut out = z.clone();
    prox_f_into(z, params, sys, spec, &mut out);
    Ok(out)
}

/// Convenience form that samples the system on `grid` first.
pub fn prox_f(z: &TrajectoryPair, params: ProxParameters, spec: &ProblemSpec, grid: &crate::model::TimeGrid) -> Result<TrajectoryPair> {
    let sys = SampledSystem::new(spec, grid)?;
    prox_f_sampled(z, params, &sys, spec)
}

/// Writes `Prox_f(z)` into `out`; shapes must already agree.
pub(crate) fn prox_f_into(z: &TrajectoryPair, params: ProxParameters, sys: &SampledSystem, spec: &ProblemSpec, out: &mut TrajectoryPair) {
    let beta = params.beta();
    let xb = spec.state_bounds();
    let ub = spec.control_bounds();
    for k in 0..z.nodes() {
        let q = sys.q(k);
        let r = sys.r(k);
        for (i, (o, v)) in out.x.row_mut(k).iter_mut().zip(z.x.row(k)).enumerate() {
            *o = prox_scalar(*v, beta, q[i], xb.lower[i], xb.upper[i]);
        }
        for (j, (o, v)) in out.u.row_mut(k).iter_mut().zip(z.u.row(k)).enumerate() {
            *o = prox_scalar(*v, beta, r[j], ub.lower[j], ub.upper[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{build_grid, Bounds, DiagonalFn, MatrixFn, NodeMatrix};
    use proptest::prelude::*;

    fn spec(xb: Bounds, ub: Bounds, q: Vec<f64>, r: Vec<f64>) -> ProblemSpec {
        ProblemSpec::builder(
            MatrixFn::Constant(DenseMatrix::zeros(2, 2)),
            MatrixFn::Constant(DenseMatrix::identity(2)),
        )
        .horizon(0.0, 1.0)
        .state_weight(DiagonalFn::Constant(q))
        .control_weight(DiagonalFn::Constant(r))
        .state_bounds(xb)
        .control_bounds(ub)
        .build()
        .unwrap()
    }

    #[test]
    fn gamma_beta_relation() {
        let p = ProxParameters::from_gamma(0.6).unwrap();
        assert!((p.beta() - 2.0 / 3.0).abs() < 1e-14);
        let p2 = ProxParameters::from_beta(p.beta()).unwrap();
        assert!((p2.gamma() - 0.6).abs() < 1e-14);
        assert!(ProxParameters::from_gamma(1.0).is_err());
        assert!(ProxParameters::from_gamma(0.0).is_err());
    }

    #[test]
    fn scalar_case_from_table_bounds() {
        // u⁻ = 0.9, β = 2/3, r = 1: 0.9 / (5/3) = 0.54, clamped to 0.1.
        let p = ProxParameters::from_gamma(0.6).unwrap();
        let v = prox_scalar(0.9, p.beta(), 1.0, -0.4, 0.1);
        assert_eq!(v, 0.1);
        assert!((0.9 / (p.beta() + 1.0) - 0.54).abs() < 1e-15);
    }

    #[test]
    fn small_beta_inside_box_is_identity() {
        let v = prox_scalar(0.05, 1e-15, 1.0, -0.4, 0.1);
        assert!((v - 0.05).abs() < 1e-15);
    }

    #[test]
    fn zero_with_symmetric_bounds() {
        assert_eq!(prox_scalar(0.0, 3.0, 2.0, -0.7, 0.7), 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let s = spec(Bounds::unbounded(2), Bounds::unbounded(2), vec![1.0; 2], vec![1.0; 2]);
        let grid = build_grid(0.0, 1.0, 4).unwrap();
        let z = TrajectoryPair::zeros(4, 2, 2);
        let p = ProxParameters::from_gamma(0.5).unwrap();
        assert!(matches!(prox_f(&z, p, &s, &grid), Err(Error::ShapeMismatch { .. })));
    }

    fn arb_z(nodes: usize) -> impl Strategy<Value = TrajectoryPair> {
        (
            prop::collection::vec(-3.0..3.0f64, nodes * 2),
            prop::collection::vec(-3.0..3.0f64, nodes * 2),
        )
            .prop_map(move |(x, u)| TrajectoryPair {
                x: NodeMatrix::from_row_major(nodes, 2, x).unwrap(),
                u: NodeMatrix::from_row_major(nodes, 2, u).unwrap(),
            })
    }

    fn boxed_spec() -> ProblemSpec {
        spec(
            Bounds::new(vec![-0.5, f64::NEG_INFINITY], vec![f64::INFINITY, 0.8]),
            Bounds::new(vec![-0.4, -0.5], vec![0.1, 0.1]),
            vec![1.0, 0.0],
            vec![2.0, 0.5],
        )
    }

    proptest! {
        #[test]
        fn output_is_feasible_and_nonexpansive(z1 in arb_z(6), z2 in arb_z(6), gamma in 0.01..0.99f64) {
            let s = boxed_spec();
            let grid = build_grid(0.0, 1.0, 5).unwrap();
            let p = ProxParameters::from_gamma(gamma).unwrap();
            let y1 = prox_f(&z1, p, &s, &grid).unwrap();
            let y2 = prox_f(&z2, p, &s, &grid).unwrap();
            for k in 0..6 {
                for i in 0..2 {
                    prop_assert!(s.state_bounds().contains(i, y1.x.get(k, i)));
                    prop_assert!(s.control_bounds().contains(i, y1.u.get(k, i)));
                }
            }
            let dy = y1.combine(1.0, &y2, -1.0).norm();
            let dz = z1.combine(1.0, &z2, -1.0).norm();
            prop_assert!(dy <= dz + 1e-12);
        }

        #[test]
        fn pointwise_in_time(z in arb_z(6), shift in 1usize..6) {
            let s = boxed_spec();
            let grid = build_grid(0.0, 1.0, 5).unwrap();
            let p = ProxParameters::from_gamma(0.3).unwrap();
            let perm: Vec<usize> = (0..6).map(|k| (k + shift) % 6).collect();
            let permute = |t: &TrajectoryPair| TrajectoryPair {
                x: NodeMatrix::from_fn(6, 2, |k, i| t.x.get(perm[k], i)),
                u: NodeMatrix::from_fn(6, 2, |k, i| t.u.get(perm[k], i)),
            };
            let a = permute(&prox_f(&z, p, &s, &grid).unwrap());
            let b = prox_f(&permute(&z), p, &s, &grid).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn unit_weights_equal_gamma_scaling(z in arb_z(6), gamma in 0.01..0.99f64) {
            let s = spec(
                Bounds::new(vec![-0.5, -1.0], vec![0.5, 1.0]),
                Bounds::new(vec![-0.4, -0.5], vec![0.1, 0.1]),
                vec![1.0, 1.0],
                vec![1.0, 1.0],
            );
            let grid = build_grid(0.0, 1.0, 5).unwrap();
            let p = ProxParameters::from_gamma(gamma).unwrap();
            let y = prox_f(&z, p, &s, &grid).unwrap();
            for k in 0..6 {
                for i in 0..2 {
                    let ex = s.state_bounds().clamp(i, gamma * z.x.get(k, i));
                    let eu = s.control_bounds().clamp(i, gamma * z.u.get(k, i));
                    prop_assert!((y.x.get(k, i) - ex).abs() < 1e-15);
                    prop_assert!((y.u.get(k, i) - eu).abs() < 1e-15);
                }
            }
        }
    }
}
