//! Douglas–Rachford splitting for linear–quadratic optimal control problems
//! with box constraints on states and controls.
//!
//! The problem is split into an affine set (the linear dynamics with both
//! boundary conditions) and a box carrying the quadratic cost. [`dr`] runs
//! the splitting iteration, [`projector`] computes the affine projection by
//! shooting, [`prox`] holds the closed-form box proximal step. Costates and
//! state-constraint multipliers are recovered in [`duals`] and checked
//! against the Maximum Principle in [`kkt`]. [`oracle`] solves the same
//! discretized problem by an unrelated method for cross-checking.

pub mod dr;
pub mod duals;
pub mod error;
pub mod harness;
pub mod kkt;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod problems;
pub mod projector;
pub mod prox;

pub use dr::{dr_solve, dr_step, DrOutcome, DrSettings, DrSolver, SolveReport, Termination};
pub use error::{Error, Result};
pub use model::{
    build_grid, linf_distance, Bounds, CostateTrajectory, DiagonalFn, MatrixFn, MultiplierPair, NodeMatrix,
    ProblemSpec, SampledSystem, TimeGrid, TrajectoryPair,
};
pub use problems::{builtin_problem, load_problem_config, BuiltinProblem, ProblemCase};
pub use projector::{project_affine, AffineProjector};
pub use prox::{prox_f, ProxParameters};
