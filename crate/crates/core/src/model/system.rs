use super::grid::TimeGrid;
use super::problem::{check_weights, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};

/// A problem's matrices evaluated at the nodes of one grid.
///
/// Time-invariant problems store a single copy of every matrix; time-varying
/// ones store one per node. Also caches the implicit costate step
/// `(I + h·A(t_k)ᵀ)⁻¹` used by the shooting integrator.
#[derive(Debug, Clone)]
pub struct SampledSystem {
    grid: TimeGrid,
    n: usize,
    m: usize,
    a: Vec<DenseMatrix>,
    b: Vec<DenseMatrix>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    costate_step: Vec<DenseMatrix>,
}

impl SampledSystem {
    pub fn new(spec: &ProblemSpec, grid: &TimeGrid) -> Result<Self> {
        let nodes = grid.n_nodes();
        let h = grid.step();
        let sample_len = if spec.is_time_invariant() { 1 } else { nodes };
        let n = spec.state_dim();
        let m = spec.control_dim();

        let mut a = Vec::with_capacity(sample_len);
        let mut b = Vec::with_capacity(sample_len);
        let mut q = Vec::with_capacity(sample_len);
        let mut r = Vec::with_capacity(sample_len);
        let mut costate_step = Vec::with_capacity(sample_len);
        for k in 0..sample_len {
            let t = grid.node(k);
            let ak = spec.a().eval(t);
            let bk = spec.b().eval(t);
            let qk = spec.q().eval(t);
            let rk = spec.r().eval(t);
            if (ak.rows(), ak.cols()) != (n, n) || (bk.rows(), bk.cols()) != (n, m) {
                return Err(Error::Validation(format!("system matrices change shape at t = {t}")));
            }
            if !ak.is_finite() || !bk.is_finite() {
                return Err(Error::Validation(format!("non-finite system matrix at t = {t}")));
            }
            if qk.len() != n || rk.len() != m {
                return Err(Error::Validation(format!("weights change length at t = {t}")));
            }
            check_weights("q", &qk, false)?;
            check_weights("r", &rk, true)?;

            let mut step = DenseMatrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    step[(i, j)] += h * ak[(j, i)];
                }
            }
            let step_inv = Lu::new(&step, 1e-14)?.inverse();

            a.push(ak);
            b.push(bk);
            q.push(qk);
            r.push(rk);
            costate_step.push(step_inv);
        }
        Ok(Self {
            grid: grid.clone(),
            n,
            m,
            a,
            b,
            q,
            r,
            costate_step,
        })
    }

    #[inline]
    fn idx(&self, k: usize) -> usize {
        if self.a.len() == 1 {
            0
        } else {
            k
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.m
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a.len() == 1
    }

    #[inline]
    pub fn a(&self, k: usize) -> &DenseMatrix {
        &self.a[self.idx(k)]
    }

    #[inline]
    pub fn b(&self, k: usize) -> &DenseMatrix {
        &self.b[self.idx(k)]
    }

    #[inline]
    pub fn q(&self, k: usize) -> &[f64] {
        &self.q[self.idx(k)]
    }

    #[inline]
    pub fn r(&self, k: usize) -> &[f64] {
        &self.r[self.idx(k)]
    }

    /// `(I + h·A(t_k)ᵀ)⁻¹`.
    #[inline]
    pub fn costate_step(&self, k: usize) -> &DenseMatrix {
        &self.costate_step[self.idx(k)]
    }
}
