use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

type MatrixClosure = dyn Fn(f64) -> DenseMatrix + Send + Sync;
type DiagonalClosure = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// A matrix-valued function of time: either constant or a closure.
#[derive(Clone)]
pub enum MatrixFn {
    Constant(DenseMatrix),
    TimeVarying {
        rows: usize,
        cols: usize,
        f: Arc<MatrixClosure>,
    },
}

impl MatrixFn {
    pub fn time_varying<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(f64) -> DenseMatrix + Send + Sync + 'static,
    {
        MatrixFn::TimeVarying {
            rows,
            cols,
            f: Arc::new(f),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixFn::Constant(m) => (m.rows(), m.cols()),
            MatrixFn::TimeVarying { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn eval(&self, t: f64) -> DenseMatrix {
        match self {
            MatrixFn::Constant(m) => m.clone(),
            MatrixFn::TimeVarying { f, .. } => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<&DenseMatrix> {
        match self {
            MatrixFn::Constant(m) => Some(m),
            MatrixFn::TimeVarying { .. } => None,
        }
    }
}

impl PartialEq for MatrixFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (MatrixFn::Constant(a), MatrixFn::Constant(b)) => a == b,
            (MatrixFn::TimeVarying { f: a, .. }, MatrixFn::TimeVarying { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Debug for MatrixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFn::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixFn::TimeVarying { rows, cols, .. } => {
                write!(f, "TimeVarying({rows}x{cols})")
            }
        }
    }
}

/// Diagonal entries of a diagonal weight matrix as a function of time.
#[derive(Clone)]
pub enum DiagonalFn {
    Constant(Vec<f64>),
    TimeVarying { dim: usize, f: Arc<DiagonalClosure> },
}

impl DiagonalFn {
    pub fn time_varying<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        DiagonalFn::TimeVarying { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            DiagonalFn::Constant(d) => d.len(),
            DiagonalFn::TimeVarying { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            DiagonalFn::Constant(d) => d.clone(),
            DiagonalFn::TimeVarying { f, .. } => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<&[f64]> {
        match self {
            DiagonalFn::Constant(d) => Some(d),
            DiagonalFn::TimeVarying { .. } => None,
        }
    }
}

impl PartialEq for DiagonalFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DiagonalFn::Constant(a), DiagonalFn::Constant(b)) => a == b,
            (DiagonalFn::TimeVarying { f: a, .. }, DiagonalFn::TimeVarying { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Debug for DiagonalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagonalFn::Constant(d) => f.debug_tuple("Constant").field(d).finish(),
            DiagonalFn::TimeVarying { dim, .. } => write!(f, "TimeVarying({dim})"),
        }
    }
}

/// Componentwise lower/upper bounds; entries may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Clamps `v` into `[lower[i], upper[i]]`; infinite sides are no-ops.
    #[inline]
    pub fn clamp(&self, i: usize, v: f64) -> f64 {
        v.max(self.lower[i]).min(self.upper[i])
    }

    pub fn contains(&self, i: usize, v: f64) -> bool {
        v >= self.lower[i] && v <= self.upper[i]
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|l| *l == f64::NEG_INFINITY) && self.upper.iter().all(|u| *u == f64::INFINITY)
    }
}

/// Linear-quadratic optimal control problem with box constraints:
///
/// minimize ½∫(xᵀQx + uᵀRu) dt subject to ẋ = A(t)x + B(t)u,
/// x(t0) = x0, x(tf) = xf, and componentwise bounds on x and u.
///
/// Constructed through [`ProblemSpecBuilder`], which validates the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    n: usize,
    m: usize,
    t0: f64,
    tf: f64,
    a: MatrixFn,
    b: MatrixFn,
    q: DiagonalFn,
    r: DiagonalFn,
    x0: Vec<f64>,
    xf: Vec<f64>,
    state_bounds: Bounds,
    control_bounds: Bounds,
}

impl ProblemSpec {
    pub fn builder(a: MatrixFn, b: MatrixFn) -> ProblemSpecBuilder {
        ProblemSpecBuilder::new(a, b)
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }
    pub fn control_dim(&self) -> usize {
        self.m
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn tf(&self) -> f64 {
        self.tf
    }
    pub fn a(&self) -> &MatrixFn {
        &self.a
    }
    pub fn b(&self) -> &MatrixFn {
        &self.b
    }
    pub fn q(&self) -> &DiagonalFn {
        &self.q
    }
    pub fn r(&self) -> &DiagonalFn {
        &self.r
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn xf(&self) -> &[f64] {
        &self.xf
    }
    pub fn state_bounds(&self) -> &Bounds {
        &self.state_bounds
    }
    pub fn control_bounds(&self) -> &Bounds {
        &self.control_bounds
    }

    pub fn is_time_invariant(&self) -> bool {
        self.a.as_constant().is_some()
            && self.b.as_constant().is_some()
            && self.q.as_constant().is_some()
            && self.r.as_constant().is_some()
    }

    /// Same problem with every bound removed.
    pub fn without_bounds(&self) -> Self {
        Self {
            state_bounds: Bounds::unbounded(self.n),
            control_bounds: Bounds::unbounded(self.m),
            ..self.clone()
        }
    }

    /// Same problem with replaced bounds, revalidated.
    pub fn with_bounds(&self, state: Bounds, control: Bounds) -> Result<Self> {
        let spec = Self {
            state_bounds: state,
            control_bounds: control,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        if n == 0 || m == 0 {
            return Err(Error::Validation("state and control dimensions must be positive".into()));
        }
        if !(self.t0.is_finite() && self.tf.is_finite()) || self.tf <= self.t0 {
            return Err(Error::NonIncreasingInterval { t0: self.t0, tf: self.tf });
        }
        if self.a.shape() != (n, n) {
            return Err(Error::Validation(format!("A must be {n}x{n}, got {:?}", self.a.shape())));
        }
        if self.b.shape() != (n, m) {
            return Err(Error::Validation(format!("B must be {n}x{m}, got {:?}", self.b.shape())));
        }
        for (name, len, want) in [
            ("q", self.q.dim(), n),
            ("r", self.r.dim(), m),
            ("x0", self.x0.len(), n),
            ("xf", self.xf.len(), n),
            ("x_lower", self.state_bounds.lower.len(), n),
            ("x_upper", self.state_bounds.upper.len(), n),
            ("u_lower", self.control_bounds.lower.len(), m),
            ("u_upper", self.control_bounds.upper.len(), m),
        ] {
            if len != want {
                return Err(Error::Validation(format!("{name} has length {len}, expected {want}")));
            }
        }
        if let Some(a) = self.a.as_constant() {
            if !a.is_finite() {
                return Err(Error::Validation("A has non-finite entries".into()));
            }
        }
        if let Some(b) = self.b.as_constant() {
            if !b.is_finite() {
                return Err(Error::Validation("B has non-finite entries".into()));
            }
        }
        if let Some(q) = self.q.as_constant() {
            check_weights("q", q, false)?;
        }
        if let Some(r) = self.r.as_constant() {
            check_weights("r", r, true)?;
        }
        if self.x0.iter().chain(&self.xf).any(|v| !v.is_finite()) {
            return Err(Error::Validation("boundary states must be finite".into()));
        }
        for (name, bounds) in [("state", &self.state_bounds), ("control", &self.control_bounds)] {
            for (i, (lo, hi)) in bounds.lower.iter().zip(&bounds.upper).enumerate() {
                if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                    return Err(Error::Validation(format!(
                        "{name} bound {i} is crossed or invalid: [{lo}, {hi}]"
                    )));
                }
            }
        }
        for (name, x) in [("x0", &self.x0), ("xf", &self.xf)] {
            for (i, v) in x.iter().enumerate() {
                if !self.state_bounds.contains(i, *v) {
                    return Err(Error::Validation(format!(
                        "{name}[{i}] = {v} lies outside the state bounds"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_weights(name: &str, w: &[f64], strictly_positive: bool) -> Result<()> {
    for (i, v) in w.iter().enumerate() {
        let ok = v.is_finite() && if strictly_positive { *v > 0.0 } else { *v >= 0.0 };
        if !ok {
            let need = if strictly_positive { "> 0" } else { ">= 0" };
            return Err(Error::Validation(format!("{name}[{i}] = {v}, must be finite and {need}")));
        }
    }
    Ok(())
}

/// Builder for [`ProblemSpec`]. Defaults: `[t0, tf] = [0, 1]`, `Q = 0`,
/// `R = I`, zero boundary states, no bounds.
#[derive(Debug, Clone)]
pub struct ProblemSpecBuilder {
    t0: f64,
    tf: f64,
    a: MatrixFn,
    b: MatrixFn,
    q: Option<DiagonalFn>,
    r: Option<DiagonalFn>,
    x0: Option<Vec<f64>>,
    xf: Option<Vec<f64>>,
    state_bounds: Option<Bounds>,
    control_bounds: Option<Bounds>,
}

impl ProblemSpecBuilder {
    pub fn new(a: MatrixFn, b: MatrixFn) -> Self {
        Self {
            t0: 0.0,
            tf: 1.0,
            a,
            b,
            q: None,
            r: None,
            x0: None,
            xf: None,
            state_bounds: None,
            control_bounds: None,
        }
    }

    pub fn horizon(mut self, t0: f64, tf: f64) -> Self {
        self.t0 = t0;
        self.tf = tf;
        self
    }

    pub fn state_weight(mut self, q: DiagonalFn) -> Self {
        self.q = Some(q);
        self
    }

    pub fn control_weight(mut self, r: DiagonalFn) -> Self {
        self.r = Some(r);
        self
    }

    pub fn boundary(mut self, x0: Vec<f64>, xf: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self.xf = Some(xf);
        self
    }

    pub fn state_bounds(mut self, b: Bounds) -> Self {
        self.state_bounds = Some(b);
        self
    }

    pub fn control_bounds(mut self, b: Bounds) -> Self {
        self.control_bounds = Some(b);
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let (n, _) = self.a.shape();
        let (_, m) = self.b.shape();
        let spec = ProblemSpec {
            n,
            m,
            t0: self.t0,
            tf: self.tf,
            a: self.a,
            b: self.b,
            q: self.q.unwrap_or_else(|| DiagonalFn::Constant(vec![0.0; n])),
            r: self.r.unwrap_or_else(|| DiagonalFn::Constant(vec![1.0; m])),
            x0: self.x0.unwrap_or_else(|| vec![0.0; n]),
            xf: self.xf.unwrap_or_else(|| vec![0.0; n]),
            state_bounds: self.state_bounds.unwrap_or_else(|| Bounds::unbounded(n)),
            control_bounds: self.control_bounds.unwrap_or_else(|| Bounds::unbounded(m)),
        };
        spec.validate()?;
        Ok(spec)
    }
}
