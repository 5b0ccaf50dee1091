use thiserror::Error;

/// Errors raised while building, solving, or verifying a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time interval must be increasing (t0 = {t0}, tf = {tf})")]
    NonIncreasingInterval { t0: f64, tf: f64 },

    #[error("grid needs at least 2 steps, got {n_steps}")]
    GridTooCoarse { n_steps: usize },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid problem: {0}")]
    Validation(String),

    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    #[error("shooting Jacobian is singular (pivot {pivot:e} below threshold {threshold:e}); the system may not be controllable on this grid")]
    SingularShootingJacobian { pivot: f64, threshold: f64 },

    #[error("singular matrix (pivot {pivot:e} below threshold {threshold:e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("non-finite value while integrating at node {node}")]
    NonFiniteState { node: usize },

    #[error("no junction with a usable denominator; costate cannot be rescaled")]
    NoUsableJunction,

    #[error("more than one state constraint active at node {node}")]
    UnsupportedActiveSet { node: usize },

    #[error("discretized problem is infeasible: {0}")]
    InfeasibleDiscretization(String),

    #[error("iteration limit of {iterations} reached before convergence")]
    IterationLimit { iterations: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(what: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
