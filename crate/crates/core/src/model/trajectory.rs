use crate::error::{Error, Result};

/// Samples of a vector-valued function at grid nodes, stored row-major:
/// row `k` holds the value at node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix {
    nodes: usize,
    dim: usize,
    data: Vec<f64>,
}

impl NodeMatrix {
    pub fn zeros(nodes: usize, dim: usize) -> Self {
        Self {
            nodes,
            dim,
            data: vec![0.0; nodes * dim],
        }
    }

    pub fn from_fn(nodes: usize, dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nodes * dim);
        for k in 0..nodes {
            for i in 0..dim {
                data.push(f(k, i));
            }
        }
        Self { nodes, dim, data }
    }

    pub fn from_row_major(nodes: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nodes * dim {
            return Err(Error::shape("node matrix data", nodes * dim, data.len()));
        }
        Ok(Self { nodes, dim, data })
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.dim + i]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, v: f64) {
        self.data[k * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Component `i` across all nodes.
    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.nodes).map(|k| self.get(k, i)).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.dim == other.dim
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Max over nodes and components of `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            nodes: self.nodes,
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// `a·self + b·other`, elementwise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            nodes: self.nodes,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

/// State samples `x` ((N+1)×n) and control samples `u` ((N+1)×m) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub x: NodeMatrix,
    pub u: NodeMatrix,
}

impl TrajectoryPair {
    pub fn new(x: NodeMatrix, u: NodeMatrix) -> Result<Self> {
        if x.nodes() != u.nodes() {
            return Err(Error::shape("trajectory node count", x.nodes(), u.nodes()));
        }
        Ok(Self { x, u })
    }

    pub fn zeros(nodes: usize, n: usize, m: usize) -> Self {
        Self {
            x: NodeMatrix::zeros(nodes, n),
            u: NodeMatrix::zeros(nodes, m),
        }
    }

    pub fn nodes(&self) -> usize {
        self.x.nodes()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.x.same_shape(&other.x) && self.u.same_shape(&other.u)
    }

    pub fn check_shape(&self, nodes: usize, n: usize, m: usize) -> Result<()> {
        let ok = self.x.nodes() == nodes && self.u.nodes() == nodes && self.x.dim() == n && self.u.dim() == m;
        if ok {
            Ok(())
        } else {
            Err(Error::shape(
                "trajectory pair",
                format!("{nodes} nodes, n={n}, m={m}"),
                format!(
                    "{}/{} nodes, n={}, m={}",
                    self.x.nodes(),
                    self.u.nodes(),
                    self.x.dim(),
                    self.u.dim()
                ),
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite()
    }

    /// `a·self + b·other`, elementwise on both components.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            x: self.x.combine(a, &other.x, b),
            u: self.u.combine(a, &other.u, b),
        }
    }

    /// Discrete ℓ² inner product over every entry (unweighted).
    pub fn dot(&self, other: &Self) -> f64 {
        let dx: f64 = self.x.as_slice().iter().zip(other.x.as_slice()).map(|(a, b)| a * b).sum();
        let du: f64 = self.u.as_slice().iter().zip(other.u.as_slice()).map(|(a, b)| a * b).sum();
        dx + du
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Discrete L∞ distances `(max|a.x - b.x|, max|a.u - b.u|)`.
pub fn linf_distance(a: &TrajectoryPair, b: &TrajectoryPair) -> Result<(f64, f64)> {
    if !a.same_shape(b) {
        return Err(Error::shape(
            "linf_distance",
            format!("{}x{} / {}x{}", a.x.nodes(), a.x.dim(), a.u.nodes(), a.u.dim()),
            format!("{}x{} / {}x{}", b.x.nodes(), b.x.dim(), b.u.nodes(), b.u.dim()),
        ));
    }
    Ok((a.x.max_abs_diff(&b.x), a.u.max_abs_diff(&b.u)))
}

/// Costate samples λ, (N+1)×n.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateTrajectory {
    pub lambda: NodeMatrix,
}

impl CostateTrajectory {
    pub fn new(lambda: NodeMatrix) -> Self {
        Self { lambda }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda: self.lambda.scaled(c),
        }
    }
}

/// State-constraint multipliers: `mu1` for upper bounds, `mu2` for lower
/// bounds, both (N+1)×n and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierPair {
    pub mu1: NodeMatrix,
    pub mu2: NodeMatrix,
}

impl MultiplierPair {
    pub fn zeros(nodes: usize, n: usize) -> Self {
        Self {
            mu1: NodeMatrix::zeros(nodes, n),
            mu2: NodeMatrix::zeros(nodes, n),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.mu1.as_slice().iter().chain(self.mu2.as_slice()).all(|v| *v >= 0.0)
    }
}
