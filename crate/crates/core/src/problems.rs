//! Built-in benchmark problems and the JSON problem-config format.
//!
//! # Config format
//!
//! ```json
//! {
//!   "n": 2, "m": 2, "t0": 0.0, "tf": 6.283185307179586,
//!   "A": [[0, 1], [-4, 0]],
//!   "B": [[1, 0], [0, 1]],
//!   "q": [1, 1],
//!   "r": [1, 1],
//!   "x0": [0, 1], "xf": [0, 0],
//!   "x_lower": [-0.025, null],
//!   "u_lower": [-0.4, -0.5], "u_upper": [0.1, 0.1]
//! }
//! ```
//!
//! Matrices are lists of rows. `q`/`r` hold the diagonals of `Q`/`R`; a full
//! `"Q"`/`"R"` matrix is accepted instead but must be diagonal. Bound arrays
//! are optional (absent means unbounded) and a `null` entry means unbounded
//! on that side.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Bounds, DiagonalFn, MatrixFn, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinProblem {
    /// Harmonic oscillator with a velocity forcing, n = 2, m = 2.
    Pho,
    /// Two masses in series on two springs, n = 4, m = 2.
    Psm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemCase {
    /// Control bounds only.
    Case1,
    /// Control bounds plus a lower bound on `x1`.
    Case2,
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinProblem::Pho => "pho",
            BuiltinProblem::Psm => "psm",
        })
    }
}

impl FromStr for BuiltinProblem {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pho" => Ok(BuiltinProblem::Pho),
            "psm" => Ok(BuiltinProblem::Psm),
            other => Err(format!("unknown problem '{other}' (expected pho or psm)")),
        }
    }
}

impl fmt::Display for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemCase::Case1 => "1",
            ProblemCase::Case2 => "2",
        })
    }
}

impl FromStr for ProblemCase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "1" => Ok(ProblemCase::Case1),
            "2" => Ok(ProblemCase::Case2),
            other => Err(format!("unknown case '{other}' (expected 1 or 2)")),
        }
    }
}

/// Returns the problem and the step parameter γ used for it.
pub fn builtin_problem(problem: BuiltinProblem, case: ProblemCase) -> (ProblemSpec, f64) {
    let inf = f64::INFINITY;
    let (a, b, x0, u_bounds, x1_lower, gamma) = match (problem, case) {
        (BuiltinProblem::Pho, c) => (
            vec![vec![0.0, 1.0], vec![-4.0, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 1.0],
            (vec![-0.4, -0.5], vec![0.1, 0.1]),
            -0.025,
            if c == ProblemCase::Case1 { 0.60 } else { 0.95 },
        ),
        (BuiltinProblem::Psm, c) => (
            vec![
                vec![0.0, 1.0, 0.0, 0.0],
                vec![-3.0, 0.0, 2.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![2.0, 0.0, -2.0, 0.0],
            ],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 1.0, 1.0, -1.0],
            (vec![-0.5, -0.4], vec![0.5, 0.4]),
            -0.2,
            if c == ProblemCase::Case1 { 0.55 } else { 0.95 },
        ),
    };
    let n = x0.len();
    let mut state = Bounds::unbounded(n);
    if case == ProblemCase::Case2 {
        state.lower[0] = x1_lower;
    }
    debug_assert!(state.upper.iter().all(|u| *u == inf));
    let spec = ProblemSpec::builder(
        MatrixFn::Constant(DenseMatrix::from_rows(&a).expect("static matrix")),
        MatrixFn::Constant(DenseMatrix::from_rows(&b).expect("static matrix")),
    )
    .horizon(0.0, 2.0 * PI)
    .state_weight(DiagonalFn::Constant(vec![1.0; n]))
    .control_weight(DiagonalFn::Constant(vec![1.0; 2]))
    .boundary(x0, vec![0.0; n])
    .state_bounds(state)
    .control_bounds(Bounds::new(u_bounds.0, u_bounds.1))
    .build()
    .expect("built-in problems are valid");
    (spec, gamma)
}

/// On-disk problem description. See the module docs for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub m: usize,
    pub t0: f64,
    pub tf: f64,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r_matrix: Option<Vec<Vec<f64>>>,
    pub x0: Vec<f64>,
    pub xf: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_upper: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_upper: Option<Vec<Option<f64>>>,
}

impl ProblemConfig {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let (a, b, q, r) = match (spec.a().as_constant(), spec.b().as_constant(), spec.q().as_constant(), spec.r().as_constant()) {
            (Some(a), Some(b), Some(q), Some(r)) => (a, b, q, r),
            _ => {
                return Err(Error::Validation(
                    "only time-invariant problems can be written as a config".into(),
                ))
            }
        };
        let sb = spec.state_bounds();
        let cb = spec.control_bounds();
        Ok(Self {
            n: spec.state_dim(),
            m: spec.control_dim(),
            t0: spec.t0(),
            tf: spec.tf(),
            a: a.to_rows(),
            b: b.to_rows(),
            q: Some(q.to_vec()),
            q_matrix: None,
            r: Some(r.to_vec()),
            r_matrix: None,
            x0: spec.x0().to_vec(),
            xf: spec.xf().to_vec(),
            x_lower: encode_bound(&sb.lower),
            x_upper: encode_bound(&sb.upper),
            u_lower: encode_bound(&cb.lower),
            u_upper: encode_bound(&cb.upper),
        })
    }

    pub fn into_spec(self) -> Result<ProblemSpec> {
        let (n, m) = (self.n, self.m);
        let a = matrix("A", &self.a, n, n)?;
        let b = matrix("B", &self.b, n, m)?;
        let q = diagonal("q", "Q", self.q, self.q_matrix, n)?.unwrap_or_else(|| vec![0.0; n]);
        let r = diagonal("r", "R", self.r, self.r_matrix, m)?
            .ok_or_else(|| Error::Validation("control weight r (or R) is required".into()))?;
        for (name, v, want) in [("x0", &self.x0, n), ("xf", &self.xf, n)] {
            if v.len() != want {
                return Err(Error::Validation(format!("{name} has length {}, expected {want}", v.len())));
            }
        }
        let state = Bounds::new(
            decode_bound("x_lower", self.x_lower, n, f64::NEG_INFINITY)?,
            decode_bound("x_upper", self.x_upper, n, f64::INFINITY)?,
        );
        let control = Bounds::new(
            decode_bound("u_lower", self.u_lower, m, f64::NEG_INFINITY)?,
            decode_bound("u_upper", self.u_upper, m, f64::INFINITY)?,
        );
        ProblemSpec::builder(MatrixFn::Constant(a), MatrixFn::Constant(b))
            .horizon(self.t0, self.tf)
            .state_weight(DiagonalFn::Constant(q))
            .control_weight(DiagonalFn::Constant(r))
            .boundary(self.x0, self.xf)
            .state_bounds(state)
            .control_bounds(control)
            .build()
    }
}

fn matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DenseMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Validation(format!("{name} must be {nrows}x{ncols}")));
    }
    DenseMatrix::from_rows(rows)
}

fn diagonal(
    name: &str,
    matrix_name: &str,
    diag: Option<Vec<f64>>,
    full: Option<Vec<Vec<f64>>>,
    dim: usize,
) -> Result<Option<Vec<f64>>> {
    match (diag, full) {
        (Some(_), Some(_)) => Err(Error::Validation(format!("give either {name} or {matrix_name}, not both"))),
        (Some(d), None) => {
            if d.len() != dim {
                return Err(Error::Validation(format!("{name} has length {}, expected {dim}", d.len())));
            }
            Ok(Some(d))
        }
        (None, Some(rows)) => {
            let mat = matrix(matrix_name, &rows, dim, dim)?;
            if !mat.is_diagonal() {
                return Err(Error::Validation(format!("{matrix_name} must be diagonal")));
            }
            Ok(Some(mat.diagonal()))
        }
        (None, None) => Ok(None),
    }
}

fn encode_bound(values: &[f64]) -> Option<Vec<Option<f64>>> {
    if values.iter().all(|v| v.is_infinite()) {
        None
    } else {
        Some(values.iter().map(|v| v.is_finite().then_some(*v)).collect())
    }
}

fn decode_bound(name: &str, values: Option<Vec<Option<f64>>>, dim: usize, missing: f64) -> Result<Vec<f64>> {
    match values {
        None => Ok(vec![missing; dim]),
        Some(v) if v.len() != dim => Err(Error::Validation(format!("{name} has length {}, expected {dim}", v.len()))),
        Some(v) => Ok(v.into_iter().map(|e| e.unwrap_or(missing)).collect()),
    }
}

/// Parses and validates a JSON problem config.
pub fn load_problem_config(text: &str) -> Result<ProblemSpec> {
    let config: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.into_spec()
}

/// Serializes a time-invariant problem as a JSON config.
pub fn problem_config_to_string(spec: &ProblemSpec) -> Result<String> {
    let config = ProblemConfig::from_spec(spec)?;
    Ok(serde_json::to_string_pretty(&config).expect("config serializes"))
}
