//! Projection onto the affine set of trajectories obeying the dynamics and
//! both boundary conditions, computed by linear shooting.
//!
//! The projection of `(x⁻, u⁻)` solves the boundary-value problem
//!
//! ```text
//! ẋ = A x + B u⁻ − B Bᵀ λ,          x(t0) = x0, x(tf) = xf
//! λ̇ = −x + x⁻ − Aᵀ λ
//! ```
//!
//! and returns `(x, u⁻ − Bᵀλ)`. On the grid the state advances by explicit
//! Euler and the costate by the matching implicit step
//!
//! ```text
//! x[k+1] = x[k] + h (A[k] x[k] + B[k] (u⁻[k] − B[k]ᵀ λ[k]))
//! λ[k+1] = (I + h A[k+1]ᵀ)⁻¹ (λ[k] + h (x⁻[k+1] − x[k+1]))
//! ```
//!
//! which is the exact adjoint of the Euler state update. With this pairing
//! the map is the orthogonal projection onto the Euler-discretized affine set
//! in the discrete L² inner product, so the splitting iteration solves a
//! well-defined finite-dimensional problem.
//!
//! The terminal state is affine in `λ(t0)`, so shooting needs one linear
//! solve. Its Jacobian depends only on `A`, `B` and the grid and is built
//! once per projector.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::model::{CostateTrajectory, NodeMatrix, ProblemSpec, SampledSystem, TimeGrid, TrajectoryPair};

/// Pivot threshold, relative to `max|J|`, below which the shooting Jacobian
/// is declared singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// Intermediate quantities of one shooting solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingWorkspace {
    /// Terminal state of the zero-costate run.
    pub z_base: Vec<f64>,
    /// Columns `z(tf, e_i) − z(tf, 0)`.
    pub jacobian: DenseMatrix,
    /// Solved initial costate.
    pub lambda0: Vec<f64>,
}

/// Result of projecting a pair onto the affine set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub pair: TrajectoryPair,
    pub costate: CostateTrajectory,
    pub lambda0: Vec<f64>,
}

/// Integrates the state/costate system forward from `(x_init, lambda0)` with
/// forcing `z = (x⁻, u⁻)` sampled at the nodes.
pub fn integrate_hamiltonian(
    sys: &SampledSystem,
    x_init: &[f64],
    lambda0: &[f64],
    z: &TrajectoryPair,
) -> Result<(NodeMatrix, CostateTrajectory)> {
    let n = sys.state_dim();
    let nodes = sys.grid().n_nodes();
    z.check_shape(nodes, n, sys.control_dim())?;
    if x_init.len() != n || lambda0.len() != n {
        return Err(Error::shape("initial state/costate", n, format!("{}/{}", x_init.len(), lambda0.len())));
    }
    let mut x = NodeMatrix::zeros(nodes, n);
    let mut lam = NodeMatrix::zeros(nodes, n);
    integrate_into(sys, x_init, lambda0, z, &mut x, &mut lam);
    if !x.is_finite() || !lam.is_finite() {
        let node = (0..nodes)
            .find(|&k| x.row(k).iter().chain(lam.row(k)).any(|v| !v.is_finite()))
            .unwrap_or(0);
        return Err(Error::NonFiniteState { node });
    }
    Ok((x, CostateTrajectory::new(lam)))
}

fn integrate_into(
    sys: &SampledSystem,
    x_init: &[f64],
    lambda0: &[f64],
    z: &TrajectoryPair,
    x: &mut NodeMatrix,
    lam: &mut NodeMatrix,
) {
    let n = sys.state_dim();
    let m = sys.control_dim();
    let h = sys.grid().step();
    let steps = sys.grid().n_steps();
    x.row_mut(0).copy_from_slice(x_init);
    lam.row_mut(0).copy_from_slice(lambda0);

    let mut v = vec![0.0; m];
    let mut ax = vec![0.0; n];
    let mut bv = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for k in 0..steps {
        let a = sys.a(k);
        let b = sys.b(k);
        // v = u⁻ − Bᵀλ
        b.tr_mul_vec_into(lam.row(k), &mut v);
        for (vj, uj) in v.iter_mut().zip(z.u.row(k)) {
            *vj = uj - *vj;
        }
        a.mul_vec_into(x.row(k), &mut ax);
        b.mul_vec_into(&v, &mut bv);
        {
            let (head, tail) = x.as_mut_slice().split_at_mut((k + 1) * n);
            let xk = &head[k * n..];
            let next = &mut tail[..n];
            for i in 0..n {
                next[i] = xk[i] + h * (ax[i] + bv[i]);
            }
        }
        let xm_next = z.x.row(k + 1);
        let x_next = x.row(k + 1);
        for i in 0..n {
            rhs[i] = lam.get(k, i) + h * (xm_next[i] - x_next[i]);
        }
        sys.costate_step(k + 1).mul_vec_into(&rhs, lam.row_mut(k + 1));
    }
}

/// Projector onto the Euler-discretized affine set for one problem and grid.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    sys: SampledSystem,
    x0: Vec<f64>,
    xf: Vec<f64>,
    jacobian: DenseMatrix,
    lu: Lu,
}

impl AffineProjector {
    pub fn new(spec: &ProblemSpec, grid: &TimeGrid) -> Result<Self> {
        Self::from_system(SampledSystem::new(spec, grid)?, spec)
    }

    pub fn from_system(sys: SampledSystem, spec: &ProblemSpec) -> Result<Self> {
        let n = sys.state_dim();
        let nodes = sys.grid().n_nodes();
        let zero = TrajectoryPair::zeros(nodes, n, sys.control_dim());
        let x0 = spec.x0().to_vec();

        let (base, _) = integrate_hamiltonian(&sys, &x0, &vec![0.0; n], &zero)?;
        let base_tf = base.row(nodes - 1).to_vec();
        let mut jacobian = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for i in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[i] = 1.0;
            let (xi, _) = integrate_hamiltonian(&sys, &x0, &e, &zero)?;
            for (r, (a, b)) in xi.row(nodes - 1).iter().zip(&base_tf).enumerate() {
                jacobian[(r, i)] = a - b;
            }
        }
        let lu = Lu::new(&jacobian, SINGULAR_PIVOT_RTOL).map_err(|e| match e {
            Error::SingularMatrix { pivot, threshold } => Error::SingularShootingJacobian { pivot, threshold },
            other => other,
        })?;
        Ok(Self {
            sys,
            x0,
            xf: spec.xf().to_vec(),
            jacobian,
            lu,
        })
    }

    pub fn system(&self) -> &SampledSystem {
        &self.sys
    }

    pub fn jacobian(&self) -> &DenseMatrix {
        &self.jacobian
    }

    /// Runs the shooting steps (near-miss, Jacobian, missing initial
    /// costate) for forcing `z` without producing the trajectory.
    pub fn shoot(&self, z: &TrajectoryPair) -> Result<ShootingWorkspace> {
        let n = self.sys.state_dim();
        let (x, _) = integrate_hamiltonian(&self.sys, &self.x0, &vec![0.0; n], z)?;
        let z_base = x.row(x.nodes() - 1).to_vec();
        let miss: Vec<f64> = z_base.iter().zip(&self.xf).map(|(a, b)| -(a - b)).collect();
        let lambda0 = self.lu.solve(&miss);
        Ok(ShootingWorkspace {
            z_base,
            jacobian: self.jacobian.clone(),
            lambda0,
        })
    }

    pub fn project(&self, z: &TrajectoryPair) -> Result<Projection> {
        let ws = self.shoot(z)?;
        let (x, costate) = integrate_hamiltonian(&self.sys, &self.x0, &ws.lambda0, z)?;
        let m = self.sys.control_dim();
        let mut u = z.u.clone();
        let mut btl = vec![0.0; m];
        for k in 0..u.nodes() {
            self.sys.b(k).tr_mul_vec_into(costate.lambda.row(k), &mut btl);
            for (uj, c) in u.row_mut(k).iter_mut().zip(&btl) {
                *uj -= c;
            }
        }
        Ok(Projection {
            pair: TrajectoryPair { x, u },
            costate,
            lambda0: ws.lambda0,
        })
    }
}

/// One-shot projection: samples the system, builds the Jacobian and projects.
pub fn project_affine(spec: &ProblemSpec, grid: &TimeGrid, z: &TrajectoryPair) -> Result<(TrajectoryPair, CostateTrajectory)> {
    let p = AffineProjector::new(spec, grid)?.project(z)?;
    Ok((p.pair, p.costate))
}

/// Max over steps of `|x[k+1] − x[k] − h (A[k] x[k] + B[k] u[k])|`.
pub fn dynamics_residual(sys: &SampledSystem, pair: &TrajectoryPair) -> f64 {
    let n = sys.state_dim();
    let h = sys.grid().step();
    let mut ax = vec![0.0; n];
    let mut bu = vec![0.0; n];
    let mut worst = 0.0_f64;
    for k in 0..sys.grid().n_steps() {
        sys.a(k).mul_vec_into(pair.x.row(k), &mut ax);
        sys.b(k).mul_vec_into(pair.u.row(k), &mut bu);
        for i in 0..n {
            let r = pair.x.get(k + 1, i) - pair.x.get(k, i) - h * (ax[i] + bu[i]);
            worst = worst.max(r.abs());
        }
    }
    worst
}
