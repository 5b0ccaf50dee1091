//! Problem data, time grids, trajectories and discrete norms.

mod grid;
mod problem;
mod system;
mod trajectory;

pub use grid::{build_grid, TimeGrid};
pub use problem::{Bounds, DiagonalFn, MatrixFn, ProblemSpec, ProblemSpecBuilder};
pub use system::SampledSystem;
pub use trajectory::{
    linf_distance, CostateTrajectory, MultiplierPair, NodeMatrix, TrajectoryPair,
};
