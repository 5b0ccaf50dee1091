//! Douglas–Rachford iteration over state/control trajectory pairs.
//!
//! Each step takes the proximal point of the box-constrained cost (the
//! "shadow" iterate), reflects it through the current iterate, projects the
//! reflection onto the affine dynamics set and moves the governing iterate by
//! the difference.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostateTrajectory, ProblemSpec, SampledSystem, TimeGrid, TrajectoryPair};
use crate::projector::{AffineProjector, Projection};
use crate::prox::{prox_f_into, ProxParameters};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DrSettings {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Starting iterate; all zeros when absent.
    pub initial: Option<TrajectoryPair>,
}

impl DrSettings {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            initial: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<ProxParameters> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidSettings(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSettings("max_iterations must be at least 1".into()));
        }
        ProxParameters::from_gamma(self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ToleranceMet,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub terminated_by: Termination,
    /// `(‖Δx‖∞, ‖Δu‖∞)` of the governing iterate, one entry per iteration.
    pub residual_history: Vec<(f64, f64)>,
    pub wall_time: f64,
    /// Trapezoidal value of ½∫(xᵀQx + uᵀRu) on the returned pair.
    pub objective_value: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().map_or(f64::INFINITY, |(dx, du)| dx.max(*du))
    }
}

/// Output of [`dr_solve`].
#[derive(Debug, Clone)]
pub struct DrOutcome {
    /// Last shadow iterate; always inside the box.
    pub solution: TrajectoryPair,
    /// Costate of the last affine projection.
    pub costate_dr: CostateTrajectory,
    /// Last affine projection `P(2·shadow − iterate)`.
    pub projected: TrajectoryPair,
    /// Governing iterate after the last update.
    pub iterate: TrajectoryPair,
    pub report: SolveReport,
}

/// Result of one DR step.
#[derive(Debug, Clone)]
pub struct DrStep {
    pub next: TrajectoryPair,
    pub shadow: TrajectoryPair,
    pub projection: Projection,
}

/// Reusable solver state for one problem and grid. Building it samples the
/// system and assembles the shooting Jacobian once.
#[derive(Debug, Clone)]
pub struct DrSolver {
    spec: ProblemSpec,
    projector: AffineProjector,
}

impl DrSolver {
    pub fn new(spec: &ProblemSpec, grid: &TimeGrid) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            projector: AffineProjector::new(spec, grid)?,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn system(&self) -> &SampledSystem {
        self.projector.system()
    }

    pub fn projector(&self) -> &AffineProjector {
        &self.projector
    }

    fn zeros(&self) -> TrajectoryPair {
        let sys = self.system();
        TrajectoryPair::zeros(sys.grid().n_nodes(), sys.state_dim(), sys.control_dim())
    }

    pub fn step(&self, current: &TrajectoryPair, params: ProxParameters) -> Result<DrStep> {
        let sys = self.system();
        current.check_shape(sys.grid().n_nodes(), sys.state_dim(), sys.control_dim())?;
        let mut shadow = current.clone();
        prox_f_into(current, params, sys, &self.spec, &mut shadow);
        let reflected = shadow.combine(2.0, current, -1.0);
        let projection = self.projector.project(&reflected)?;
        let next = TrajectoryPair {
            x: update(&current.x, &projection.pair.x, &shadow.x),
            u: update(&current.u, &projection.pair.u, &shadow.u),
        };
        Ok(DrStep {
            next,
            shadow,
            projection,
        })
    }

    pub fn solve(&self, settings: &DrSettings) -> Result<DrOutcome> {
        let params = settings.validate()?;
        let start = Instant::now();
        let mut iterate = match &settings.initial {
            Some(init) => {
                let sys = self.system();
                init.check_shape(sys.grid().n_nodes(), sys.state_dim(), sys.control_dim())?;
                init.clone()
            }
            None => self.zeros(),
        };
        let mut history = Vec::new();
        loop {
            let step = self.step(&iterate, params)?;
            let dx = step.next.x.max_abs_diff(&iterate.x);
            let du = step.next.u.max_abs_diff(&iterate.u);
            history.push((dx, du));
            iterate = step.next;
            let converged = dx.max(du) <= settings.epsilon;
            if converged || history.len() >= settings.max_iterations {
                let terminated_by = if converged {
                    Termination::ToleranceMet
                } else {
                    Termination::IterationCap
                };
                let objective_value = trapezoidal_objective(self.system(), &step.shadow);
                return Ok(DrOutcome {
                    solution: step.shadow,
                    costate_dr: step.projection.costate,
                    projected: step.projection.pair,
                    iterate,
                    report: SolveReport {
                        iterations: history.len(),
                        terminated_by,
                        residual_history: history,
                        wall_time: start.elapsed().as_secs_f64(),
                        objective_value,
                    },
                });
            }
        }
    }
}

fn update(
    current: &crate::model::NodeMatrix,
    projected: &crate::model::NodeMatrix,
    shadow: &crate::model::NodeMatrix,
) -> crate::model::NodeMatrix {
    let mut out = current.clone();
    for ((o, p), s) in out.as_mut_slice().iter_mut().zip(projected.as_slice()).zip(shadow.as_slice()) {
        *o += p - s;
    }
    out
}

/// One DR step from `current`: returns `(next, shadow)`.
pub fn dr_step(current: &TrajectoryPair, spec: &ProblemSpec, grid: &TimeGrid, settings: &DrSettings) -> Result<(TrajectoryPair, TrajectoryPair)> {
    let params = settings.validate()?;
    let step = DrSolver::new(spec, grid)?.step(current, params)?;
    Ok((step.next, step.shadow))
}

/// Runs the DR iteration until the iterate change drops to `epsilon` or the
/// iteration cap is reached, and returns the last shadow iterate.
pub fn dr_solve(spec: &ProblemSpec, grid: &TimeGrid, settings: &DrSettings) -> Result<DrOutcome> {
    DrSolver::new(spec, grid)?.solve(settings)
}

/// Composite trapezoidal rule for ½∫(xᵀQx + uᵀRu) dt.
pub fn trapezoidal_objective(sys: &SampledSystem, pair: &TrajectoryPair) -> f64 {
    let nodes = sys.grid().n_nodes();
    let h = sys.grid().step();
    let mut total = 0.0;
    for k in 0..nodes {
        let w = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
        total += w * node_cost(sys, pair, k);
    }
    h * total
}

/// Left-endpoint rule ½·h·Σ_{k<N}(xᵀQx + uᵀRu): the objective of the
/// discrete problem whose optimality system the projector integrates.
pub fn discrete_objective(sys: &SampledSystem, pair: &TrajectoryPair) -> f64 {
    let h = sys.grid().step();
    h * (0..sys.grid().n_steps()).map(|k| node_cost(sys, pair, k)).sum::<f64>()
}

fn node_cost(sys: &SampledSystem, pair: &TrajectoryPair, k: usize) -> f64 {
    let qx: f64 = pair.x.row(k).iter().zip(sys.q(k)).map(|(x, q)| q * x * x).sum();
    let ru: f64 = pair.u.row(k).iter().zip(sys.r(k)).map(|(u, r)| r * u * u).sum();
    0.5 * (qx + ru)
}
