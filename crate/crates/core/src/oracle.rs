//! Direct transcription baseline.
//!
//! Solves the Euler-discretized problem as one finite QP over
//! `w = (x_1 … x_{N−1}, u_0 … u_{N−1})`:
//!
//! ```text
//! min ½·h·Σ_{k<N} (x_kᵀQ_k x_k + u_kᵀR_k u_k)
//! s.t. x_{k+1} = x_k + h(A_k x_k + B_k u_k),  x_0, x_N fixed,  box bounds
//! ```
//!
//! An augmented-Lagrangian loop handles the equalities; each subproblem is a
//! box QP solved by projected Newton. The final active set is then polished
//! with one exact equality-constrained KKT solve. Unbounded problems go
//! straight to that KKT solve. Dense linear algebra throughout, so this is
//! meant for small grids only.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::model::{CostateTrajectory, NodeMatrix, ProblemSpec, SampledSystem, TimeGrid, TrajectoryPair};

/// Largest `N·(n + m)` the dense oracle accepts.
pub const MAX_DENSE_SIZE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Target for both the equality residual and the projected gradient.
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_outer: 200,
            max_inner: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Nodes 0..=N. Node N's control is the clamped control law evaluated
    /// with the extended costate.
    pub pair: TrajectoryPair,
    /// Negated equality multipliers, extended to node N.
    pub costate: CostateTrajectory,
    pub outer_iterations: usize,
    /// `max(‖Cw − d‖∞, ‖w − clamp(w − ∇L)‖∞)` at return.
    pub kkt_residual: f64,
    /// Value of the rectangle-rule objective.
    pub objective: f64,
}

struct Transcription {
    n: usize,
    m: usize,
    n_steps: usize,
    nx: usize,
    /// Sparse rows of `C` as `(column, value)`.
    rows: Vec<Vec<(usize, f64)>>,
    d: Vec<f64>,
    hdiag: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Transcription {
    fn new(sys: &SampledSystem, spec: &ProblemSpec) -> Self {
        let n = sys.state_dim();
        let m = sys.control_dim();
        let n_steps = sys.grid().n_steps();
        let h = sys.grid().step();
        let nx = (n_steps - 1) * n;
        let nv = nx + n_steps * m;
        let xi = |k: usize, i: usize| (k - 1) * n + i;
        let ui = |k: usize, j: usize| nx + k * m + j;

        let mut hdiag = vec![0.0; nv];
        let mut lo = vec![0.0; nv];
        let mut hi = vec![0.0; nv];
        let (sb, cb) = (spec.state_bounds(), spec.control_bounds());
        for k in 0..n_steps {
            if k >= 1 {
                for i in 0..n {
                    hdiag[xi(k, i)] = h * sys.q(k)[i];
                    lo[xi(k, i)] = sb.lower[i];
                    hi[xi(k, i)] = sb.upper[i];
                }
            }
            for j in 0..m {
                hdiag[ui(k, j)] = h * sys.r(k)[j];
                lo[ui(k, j)] = cb.lower[j];
                hi[ui(k, j)] = cb.upper[j];
            }
        }

        let mut rows = Vec::with_capacity(n_steps * n);
        let mut d = Vec::with_capacity(n_steps * n);
        for k in 0..n_steps {
            let (a, b) = (sys.a(k), sys.b(k));
            for i in 0..n {
                let mut row = Vec::with_capacity(2 * n + m);
                let mut rhs = 0.0;
                if k + 1 < n_steps {
                    row.push((xi(k + 1, i), 1.0));
                } else {
                    rhs -= spec.xf()[i];
                }
                for l in 0..n {
                    let coef = -(if i == l { 1.0 } else { 0.0 }) - h * a[(i, l)];
                    if k >= 1 {
                        if coef != 0.0 {
                            row.push((xi(k, l), coef));
                        }
                    } else {
                        rhs -= coef * spec.x0()[l];
                    }
                }
                for j in 0..m {
                    let coef = -h * b[(i, j)];
                    if coef != 0.0 {
                        row.push((ui(k, j), coef));
                    }
                }
                rows.push(row);
                d.push(rhs);
            }
        }
        Self {
            n,
            m,
            n_steps,
            nx,
            rows,
            d,
            hdiag,
            lo,
            hi,
        }
    }

    fn nv(&self) -> usize {
        self.hdiag.len()
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.d)
            .map(|(row, d)| row.iter().map(|(c, v)| v * w[*c]).sum::<f64>() - d)
            .collect()
    }

    /// `Hw + Cᵀp`.
    fn lagrangian_gradient(&self, w: &[f64], p: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.hdiag.iter().zip(w).map(|(h, w)| h * w).collect();
        for (row, pr) in self.rows.iter().zip(p) {
            for (c, v) in row {
                g[*c] += v * pr;
            }
        }
        g
    }

    fn projected_gradient_norm(&self, w: &[f64], g: &[f64]) -> f64 {
        (0..w.len())
            .map(|i| (w[i] - (w[i] - g[i]).clamp(self.lo[i], self.hi[i])).abs())
            .fold(0.0, f64::max)
    }

    fn kkt_residual(&self, w: &[f64], p: &[f64]) -> f64 {
        let primal = self.residual(w).iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        primal.max(self.projected_gradient_norm(w, &self.lagrangian_gradient(w, p)))
    }

    /// `H + ρCᵀC`, dense.
    fn penalized_hessian(&self, rho: f64) -> DenseMatrix {
        let nv = self.nv();
        let mut mat = DenseMatrix::from_diagonal(&self.hdiag);
        for row in &self.rows {
            for (ca, va) in row {
                for (cb, vb) in row {
                    mat[(*ca, *cb)] += rho * va * vb;
                }
            }
        }
        debug_assert_eq!(mat.rows(), nv);
        mat
    }

    fn is_unbounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|b| b.is_infinite())
    }

    /// Exact KKT solve with variables in `fixed` held at their values.
    fn equality_solve(&self, w: &[f64], fixed: &[bool]) -> Option<(Vec<f64>, Vec<f64>)> {
        let free: Vec<usize> = (0..self.nv()).filter(|i| !fixed[*i]).collect();
        let mut pos = vec![usize::MAX; self.nv()];
        for (p, i) in free.iter().enumerate() {
            pos[*i] = p;
        }
        let nf = free.len();
        let nc = self.rows.len();
        let mut kkt = DenseMatrix::zeros(nf + nc, nf + nc);
        let mut rhs = vec![0.0; nf + nc];
        for (p, i) in free.iter().enumerate() {
            kkt[(p, p)] = self.hdiag[*i];
        }
        for (r, row) in self.rows.iter().enumerate() {
            rhs[nf + r] = self.d[r];
            for (c, v) in row {
                if fixed[*c] {
                    rhs[nf + r] -= v * w[*c];
                } else {
                    kkt[(nf + r, pos[*c])] = *v;
                    kkt[(pos[*c], nf + r)] = *v;
                }
            }
        }
        let sol = Lu::new(&kkt, 1e-14).ok()?.solve(&rhs);
        let mut out = w.to_vec();
        for (p, i) in free.iter().enumerate() {
            out[*i] = sol[p];
        }
        Some((out, sol[nf..].to_vec()))
    }
}

/// Primal-dual active-set (semismooth Newton) solve of
/// `min ½wᵀMw + cᵀw` over `lo ≤ w ≤ hi`. `mult` holds `−(Mw + c)` and is
/// used as a warm start. Returns false if the active set does not settle.
fn box_qp_active_set(
    mat: &DenseMatrix,
    c: &[f64],
    lo: &[f64],
    hi: &[f64],
    w: &mut [f64],
    mult: &mut [f64],
    max_iter: usize,
) -> bool {
    let nv = c.len();
    let shift = 1.0 / (0..nv).map(|i| mat[(i, i)]).fold(f64::MIN_POSITIVE, f64::max);
    // 0 free, 1 at lower, 2 at upper.
    let mut state = vec![u8::MAX; nv];
    for _ in 0..max_iter.min(100) {
        let next: Vec<u8> = (0..nv)
            .map(|i| {
                let trial = w[i] + shift * mult[i];
                if trial < lo[i] {
                    1
                } else if trial > hi[i] {
                    2
                } else {
                    0
                }
            })
            .collect();
        if next == state {
            return true;
        }
        state = next;
        for i in 0..nv {
            match state[i] {
                1 => w[i] = lo[i],
                2 => w[i] = hi[i],
                _ => {}
            }
        }
        let free: Vec<usize> = (0..nv).filter(|i| state[*i] == 0).collect();
        if !free.is_empty() {
            let mut sub = DenseMatrix::zeros(free.len(), free.len());
            let mut rhs = vec![0.0; free.len()];
            for (a, ia) in free.iter().enumerate() {
                rhs[a] = -c[*ia];
                for j in 0..nv {
                    if state[j] != 0 {
                        rhs[a] -= mat[(*ia, j)] * w[j];
                    }
                }
                for (b, ib) in free.iter().enumerate() {
                    sub[(a, b)] = mat[(*ia, *ib)];
                }
            }
            let Ok(lu) = Lu::new(&sub, 1e-15) else {
                return false;
            };
            for (ia, v) in free.iter().zip(lu.solve(&rhs)) {
                w[*ia] = v;
            }
        }
        let g = mat.mul_vec(w);
        for i in 0..nv {
            mult[i] = if state[i] == 0 { 0.0 } else { -(g[i] + c[i]) };
        }
    }
    false
}

/// Projected Newton for `min ½wᵀMw + cᵀw` over `lo ≤ w ≤ hi`, `M` SPD.
fn box_qp(mat: &DenseMatrix, c: &[f64], lo: &[f64], hi: &[f64], w: &mut [f64], tol: f64, max_iter: usize) -> bool {
    let nv = c.len();
    let objective = |w: &[f64]| -> f64 {
        let mw = mat.mul_vec(w);
        w.iter().zip(&mw).zip(c).map(|((w, mw), c)| 0.5 * w * mw + c * w).sum()
    };
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = wi.clamp(lo[i], hi[i]);
    }
    for _ in 0..max_iter {
        let mut g = mat.mul_vec(w);
        for (gi, ci) in g.iter_mut().zip(c) {
            *gi += ci;
        }
        let pg = (0..nv)
            .map(|i| (w[i] - (w[i] - g[i]).clamp(lo[i], hi[i])).abs())
            .fold(0.0, f64::max);
        if pg <= tol {
            return true;
        }

        let eps = pg.min(1e-3);
        let binding: Vec<bool> = (0..nv)
            .map(|i| (w[i] <= lo[i] + eps && g[i] > 0.0) || (w[i] >= hi[i] - eps && g[i] < 0.0))
            .collect();
        let free: Vec<usize> = (0..nv).filter(|i| !binding[*i]).collect();
        // Near-binding variables take a diagonally scaled gradient step so
        // they can land on their bound.
        let mut dir: Vec<f64> = (0..nv)
            .map(|i| if binding[i] { -g[i] / mat[(i, i)].max(f64::MIN_POSITIVE) } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let mut sub = DenseMatrix::zeros(free.len(), free.len());
            for (a, ia) in free.iter().enumerate() {
                for (b, ib) in free.iter().enumerate() {
                    sub[(a, b)] = mat[(*ia, *ib)];
                }
            }
            let rhs: Vec<f64> = free.iter().map(|i| -g[*i]).collect();
            match Lu::new(&sub, 1e-15) {
                Ok(lu) => {
                    for (a, d) in free.iter().zip(lu.solve(&rhs)) {
                        dir[*a] = d;
                    }
                }
                Err(_) => {
                    for (a, r) in free.iter().zip(rhs) {
                        dir[*a] = r;
                    }
                }
            }
        }
        let f0 = objective(w);
        let mut t = 1.0;
        let mut trial = vec![0.0; nv];
        let mut accepted = false;
        for _ in 0..60 {
            let mut decrease = 0.0;
            for i in 0..nv {
                trial[i] = (w[i] + t * dir[i]).clamp(lo[i], hi[i]);
                decrease += g[i] * (trial[i] - w[i]);
            }
            if objective(&trial) <= f0 + 1e-4 * decrease {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Fall back to a projected gradient step with the same search.
            let step = 1.0 / mat.max_abs().max(f64::MIN_POSITIVE);
            for i in 0..nv {
                trial[i] = (w[i] - step * g[i]).clamp(lo[i], hi[i]);
            }
            if objective(&trial) >= f0 {
                return false;
            }
        }
        w.copy_from_slice(&trial);
    }
    false
}

/// Solves the transcribed QP to `settings.tolerance`.
pub fn solve_discretized_qp(spec: &ProblemSpec, grid: &TimeGrid, settings: &OracleSettings) -> Result<OracleSolution> {
    let sys = SampledSystem::new(spec, grid)?;
    solve_sampled(&sys, spec, settings)
}

pub fn solve_sampled(sys: &SampledSystem, spec: &ProblemSpec, settings: &OracleSettings) -> Result<OracleSolution> {
    let size = sys.grid().n_steps() * (sys.state_dim() + sys.control_dim());
    if size > MAX_DENSE_SIZE {
        return Err(Error::Validation(format!(
            "dense oracle limited to N·(n+m) ≤ {MAX_DENSE_SIZE}, got {size}"
        )));
    }
    if !(settings.tolerance > 0.0) || settings.max_outer == 0 || settings.max_inner == 0 {
        return Err(Error::InvalidSettings("oracle tolerance and iteration limits must be positive".into()));
    }
    let tr = Transcription::new(sys, spec);
    let nv = tr.nv();
    let tol = settings.tolerance;

    if tr.is_unbounded() {
        let (w, p) = tr
            .equality_solve(&vec![0.0; nv], &vec![false; nv])
            .ok_or_else(|| Error::InfeasibleDiscretization("equality constraints are rank deficient".into()))?;
        let kkt = tr.kkt_residual(&w, &p);
        return Ok(assemble(sys, spec, &tr, &w, &p, 0, kkt));
    }

    let hscale = tr.hdiag.iter().fold(0.0_f64, |a, h| a.max(*h)).max(1e-12);
    let mut rho = 1e3 * hscale;
    let rho_max = 1e9 * hscale;
    let mut mat = tr.penalized_hessian(rho);
    let mut w: Vec<f64> = vec![0.0; nv];
    let mut p = vec![0.0; tr.rows.len()];
    let mut bound_mult = vec![0.0; nv];
    let mut prev_primal = f64::INFINITY;
    let mut outer = 0;
    let mut kkt = f64::INFINITY;
    while outer < settings.max_outer {
        outer += 1;
        let mut c = vec![0.0; nv];
        for ((row, pr), d) in tr.rows.iter().zip(&p).zip(&tr.d) {
            let coef = pr - rho * d;
            for (col, v) in row {
                c[*col] += v * coef;
            }
        }
        // Gradients of the penalized model carry roundoff of order eps·‖M‖·‖w‖.
        let wscale = w.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        let inner_tol = (0.1 * tol).max(1e-13 * mat.max_abs() * wscale);
        if !box_qp_active_set(&mat, &c, &tr.lo, &tr.hi, &mut w, &mut bound_mult, settings.max_inner) {
            box_qp(&mat, &c, &tr.lo, &tr.hi, &mut w, inner_tol, settings.max_inner);
        }
        let r = tr.residual(&w);
        for (pr, ri) in p.iter_mut().zip(&r) {
            *pr += rho * ri;
        }
        let primal = r.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        kkt = tr.kkt_residual(&w, &p);
        if let Some((wp, pp, polished)) = polish(&tr, &w) {
            if polished <= tol || polished < kkt {
                w = wp;
                p = pp;
                kkt = polished;
            }
        }
        if kkt <= tol {
            break;
        }
        if primal > 0.25 * prev_primal && rho < rho_max {
            rho = (rho * 10.0).min(rho_max);
            mat = tr.penalized_hessian(rho);
        }
        prev_primal = primal;
    }

    if kkt > tol {
        let primal = tr.residual(&w).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if primal > 1e-6 && rho >= rho_max {
            return Err(Error::InfeasibleDiscretization(format!(
                "equality residual stalled at {primal:.3e} with the bounds enforced"
            )));
        }
        return Err(Error::IterationLimit { iterations: outer });
    }
    Ok(assemble(sys, spec, &tr, &w, &p, outer, kkt))
}

/// Holds the variables sitting on bounds and solves for the rest exactly.
/// Returns `None` if the reduced system is singular or leaves the box.
fn polish(tr: &Transcription, w: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let nv = tr.nv();
    let fixed: Vec<bool> = (0..nv).map(|i| w[i] <= tr.lo[i] || w[i] >= tr.hi[i]).collect();
    let (wp, pp) = tr.equality_solve(w, &fixed)?;
    let slack = 1e-12 * (1.0 + wp.iter().fold(0.0_f64, |a, x| a.max(x.abs())));
    if !(0..nv).all(|i| wp[i] >= tr.lo[i] - slack && wp[i] <= tr.hi[i] + slack) {
        return None;
    }
    let wp: Vec<f64> = (0..nv).map(|i| wp[i].clamp(tr.lo[i], tr.hi[i])).collect();
    let res = tr.kkt_residual(&wp, &pp);
    Some((wp, pp, res))
}

fn assemble(
    sys: &SampledSystem,
    spec: &ProblemSpec,
    tr: &Transcription,
    w: &[f64],
    p: &[f64],
    outer: usize,
    kkt: f64,
) -> OracleSolution {
    let (n, m, ns) = (tr.n, tr.m, tr.n_steps);
    let nodes = ns + 1;
    let x = NodeMatrix::from_fn(nodes, n, |k, i| {
        if k == 0 {
            spec.x0()[i]
        } else if k == ns {
            spec.xf()[i]
        } else {
            w[(k - 1) * n + i]
        }
    });
    let mut lambda = NodeMatrix::from_fn(nodes, n, |k, i| if k < ns { -p[k * n + i] } else { 0.0 });
    let h = sys.grid().step();
    let q = sys.q(ns);
    let rhs: Vec<f64> = (0..n).map(|i| lambda.get(ns - 1, i) - h * q[i] * x.get(ns, i)).collect();
    let last = sys.costate_step(ns).mul_vec(&rhs);
    lambda.row_mut(ns).copy_from_slice(&last);

    let cb = spec.control_bounds();
    let u = NodeMatrix::from_fn(nodes, m, |k, j| {
        if k < ns {
            w[tr.nx + k * m + j]
        } else {
            let b = sys.b(ns);
            let g: f64 = (0..n).map(|i| b[(i, j)] * last[i]).sum();
            cb.clamp(j, -g / sys.r(ns)[j])
        }
    });
    let pair = TrajectoryPair { x, u };
    let objective = crate::dr::discrete_objective(sys, &pair);
    OracleSolution {
        pair,
        costate: CostateTrajectory::new(lambda),
        outer_iterations: outer,
        kkt_residual: kkt,
        objective,
    }
}
