use crate::error::{Error, Result};

/// Uniform partition of `[t0, tf]` into `n_steps` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    n_steps: usize,
    h: f64,
}

/// Builds a uniform grid with `n_steps + 1` nodes.
pub fn build_grid(t0: f64, tf: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(t0, tf, n_steps)
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite()) || tf <= t0 {
            return Err(Error::NonIncreasingInterval { t0, tf });
        }
        if n_steps < 2 {
            return Err(Error::GridTooCoarse { n_steps });
        }
        Ok(Self {
            t0,
            tf,
            n_steps,
            h: (tf - t0) / n_steps as f64,
        })
    }

    #[inline]
    pub fn t0(&self) -> f64 {
        self.t0
    }

    #[inline]
    pub fn tf(&self) -> f64 {
        self.tf
    }

    /// Number of intervals `N`.
    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `N + 1`.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.h
    }

    /// Time of node `k`; the last node is pinned to `tf` exactly.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.tf
        } else {
            self.t0 + k as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.node(k))
    }
}
