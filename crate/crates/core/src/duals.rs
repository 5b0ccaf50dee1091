//! Costate scaling at a control junction and state-constraint multipliers.
//!
//! The costate produced by the affine projection differs from the true
//! costate by a scalar factor `α`. At a junction node the control is both
//! interior and (one node over) saturated, so the unconstrained control law
//! `u_j = −b_jᵀλ / r_j` fixes `α` from a single value. Multipliers then
//! follow from the adjoint equation with a finite-difference `λ̇`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Bounds, CostateTrajectory, MultiplierPair, NodeMatrix, SampledSystem, TrajectoryPair};

/// Decides when a value sits on a bound: `|v − b| ≤ relative·|b| + absolute`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveTolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for ActiveTolerance {
    fn default() -> Self {
        Self {
            relative: 1e-6,
            absolute: 1e-9,
        }
    }
}

impl ActiveTolerance {
    pub fn at(&self, v: f64, bound: f64) -> bool {
        bound.is_finite() && (v - bound).abs() <= self.relative * bound.abs() + self.absolute
    }

    /// Which side of `bounds` component `i` sits on, if any. Lower wins
    /// when both match.
    pub fn side(&self, bounds: &Bounds, i: usize, v: f64) -> Option<BoundSide> {
        if self.at(v, bounds.lower[i]) {
            Some(BoundSide::Lower)
        } else if self.at(v, bounds.upper[i]) {
            Some(BoundSide::Upper)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JunctionSide {
    /// Interior before, saturated after.
    EnteringBound,
    /// Saturated before, interior after.
    LeavingBound,
}

/// A transition between a saturated run and an interior run of one control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionPoint {
    pub control_index: usize,
    /// Interior node next to the saturated run. The scale factor is read here.
    pub node_index: usize,
    /// Saturated node next to `node_index`.
    pub saturated_node: usize,
    pub side: JunctionSide,
}

/// Finds every saturated/interior transition of every control component.
pub fn detect_junctions(u: &NodeMatrix, bounds: &Bounds, tol: ActiveTolerance) -> Vec<JunctionPoint> {
    let mut out = Vec::new();
    if u.nodes() < 2 {
        return out;
    }
    for j in 0..u.dim() {
        let active: Vec<bool> = (0..u.nodes()).map(|k| tol.side(bounds, j, u.get(k, j)).is_some()).collect();
        for k in 0..u.nodes() - 1 {
            match (active[k], active[k + 1]) {
                (true, false) => out.push(JunctionPoint {
                    control_index: j,
                    node_index: k + 1,
                    saturated_node: k,
                    side: JunctionSide::LeavingBound,
                }),
                (false, true) => out.push(JunctionPoint {
                    control_index: j,
                    node_index: k,
                    saturated_node: k + 1,
                    side: JunctionSide::EnteringBound,
                }),
                _ => {}
            }
        }
    }
    out
}

/// Nodes where some state component switches between on-bound and off-bound.
pub fn state_transition_nodes(x: &NodeMatrix, bounds: &Bounds, tol: ActiveTolerance) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..x.dim() {
        for k in 0..x.nodes().saturating_sub(1) {
            let a = tol.side(bounds, i, x.get(k, i)).is_some();
            let b = tol.side(bounds, i, x.get(k + 1, i)).is_some();
            if a != b {
                out.push(if a { k } else { k + 1 });
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `b_jᵀλ` at node `k`.
pub fn costate_gain(sys: &SampledSystem, lam: &NodeMatrix, j: usize, k: usize) -> f64 {
    let b = sys.b(k);
    (0..sys.state_dim()).map(|i| b[(i, j)] * lam.get(k, i)).sum()
}

/// Costate recovered from one junction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateRecovery {
    pub lambda: CostateTrajectory,
    pub alpha: f64,
    pub junction: JunctionPoint,
    /// `b_jᵀλ^DR` at the junction node.
    pub denominator: f64,
}

/// Relative cutoff under which `b_jᵀλ^DR` is treated as zero.
pub const DENOMINATOR_RTOL: f64 = 1e-10;

/// Scales `lam_dr` so the control law holds at the best-conditioned junction.
pub fn recover_costate(
    lam_dr: &CostateTrajectory,
    solution: &TrajectoryPair,
    sys: &SampledSystem,
    junctions: &[JunctionPoint],
) -> Result<CostateRecovery> {
    let nodes = sys.grid().n_nodes();
    solution.check_shape(nodes, sys.state_dim(), sys.control_dim())?;
    if lam_dr.lambda.nodes() != nodes || lam_dr.lambda.dim() != sys.state_dim() {
        return Err(Error::shape(
            "costate",
            format!("{nodes}x{}", sys.state_dim()),
            format!("{}x{}", lam_dr.lambda.nodes(), lam_dr.lambda.dim()),
        ));
    }
    let scale = lam_dr.lambda.max_abs()
        * (0..nodes)
            .map(|k| sys.b(k).max_abs())
            .fold(0.0, f64::max);
    let threshold = DENOMINATOR_RTOL * scale;

    let mut best: Option<(JunctionPoint, f64)> = None;
    for jp in junctions {
        if jp.node_index >= nodes || jp.control_index >= sys.control_dim() {
            continue;
        }
        let den = costate_gain(sys, &lam_dr.lambda, jp.control_index, jp.node_index);
        if !(den.abs() > threshold) {
            continue;
        }
        if best.is_none_or(|(_, d)| den.abs() > d.abs()) {
            best = Some((*jp, den));
        }
    }
    let (junction, denominator) = best.ok_or(Error::NoUsableJunction)?;
    let (j, k) = (junction.control_index, junction.node_index);
    let alpha = -sys.r(k)[j] * solution.u.get(k, j) / denominator;
    if !alpha.is_finite() {
        return Err(Error::NoUsableJunction);
    }
    Ok(CostateRecovery {
        lambda: lam_dr.scaled(alpha),
        alpha,
        junction,
        denominator,
    })
}

/// Least-squares scale over all interior control samples. Used when no
/// junction exists, e.g. for problems whose controls never saturate.
pub fn fit_costate_scale(
    lam_dr: &CostateTrajectory,
    solution: &TrajectoryPair,
    sys: &SampledSystem,
    control_bounds: &Bounds,
    tol: ActiveTolerance,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..sys.grid().n_nodes() {
        for j in 0..sys.control_dim() {
            let u = solution.u.get(k, j);
            if tol.side(control_bounds, j, u).is_some() {
                continue;
            }
            let g = costate_gain(sys, &lam_dr.lambda, j, k);
            num += -sys.r(k)[j] * u * g;
            den += g * g;
        }
    }
    let alpha = num / den;
    if den > 0.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(Error::NoUsableJunction)
    }
}

/// `dλ/dt` by central differences, one-sided at both ends.
pub fn costate_derivative(lam: &NodeMatrix, h: f64) -> NodeMatrix {
    let nodes = lam.nodes();
    NodeMatrix::from_fn(nodes, lam.dim(), |k, i| {
        if k == 0 {
            (lam.get(1, i) - lam.get(0, i)) / h
        } else if k == nodes - 1 {
            (lam.get(k, i) - lam.get(k - 1, i)) / h
        } else {
            (lam.get(k + 1, i) - lam.get(k - 1, i)) / (2.0 * h)
        }
    })
}

/// `−Qx − Aᵀλ − λ̇` at every node; equals `μ¹ − μ²` for an exact solution.
pub fn adjoint_defect(x: &NodeMatrix, lam: &NodeMatrix, sys: &SampledSystem) -> NodeMatrix {
    let n = sys.state_dim();
    let dlam = costate_derivative(lam, sys.grid().step());
    let mut at_lam = vec![0.0; n];
    let mut out = NodeMatrix::zeros(lam.nodes(), n);
    for k in 0..lam.nodes() {
        sys.a(k).tr_mul_vec_into(lam.row(k), &mut at_lam);
        let q = sys.q(k);
        for i in 0..n {
            out.set(k, i, -q[i] * x.get(k, i) - at_lam[i] - dlam.get(k, i));
        }
    }
    out
}

/// Multipliers of the state bounds from the adjoint equation, assuming at
/// most one state bound is active at any node.
pub fn recover_multipliers(
    solution: &TrajectoryPair,
    lam: &CostateTrajectory,
    sys: &SampledSystem,
    state_bounds: &Bounds,
    tol: ActiveTolerance,
) -> Result<MultiplierPair> {
    let nodes = sys.grid().n_nodes();
    let n = sys.state_dim();
    solution.check_shape(nodes, n, sys.control_dim())?;
    let mut mu = MultiplierPair::zeros(nodes, n);
    if state_bounds.is_unbounded() {
        return Ok(mu);
    }
    let defect = adjoint_defect(&solution.x, &lam.lambda, sys);
    for k in 0..nodes {
        let mut active = None;
        for i in 0..n {
            if let Some(side) = tol.side(state_bounds, i, solution.x.get(k, i)) {
                if active.is_some() {
                    return Err(Error::UnsupportedActiveSet { node: k });
                }
                active = Some((i, side));
            }
        }
        match active {
            Some((i, BoundSide::Upper)) => mu.mu1.set(k, i, defect.get(k, i).max(0.0)),
            Some((i, BoundSide::Lower)) => mu.mu2.set(k, i, (-defect.get(k, i)).max(0.0)),
            None => {}
        }
    }
    Ok(mu)
}
