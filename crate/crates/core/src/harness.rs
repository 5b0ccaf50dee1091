//! Experiment plumbing shared by the CLI, benches and tests: the post-solve
//! analysis pipeline, γ sweeps, timing, and CSV/JSON output.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dr::{DrOutcome, DrSettings, DrSolver, Termination};
use crate::duals::{
    detect_junctions, fit_costate_scale, recover_costate, recover_multipliers, state_transition_nodes, ActiveTolerance,
    JunctionPoint,
};
use crate::error::{Error, Result};
use crate::kkt::{adjoint_residual, complementarity_residual, control_law_residual, AdjointResidual, JUNCTION_WINDOW};
use crate::model::{CostateTrajectory, MultiplierPair, ProblemSpec, SampledSystem, TimeGrid, TrajectoryPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSource {
    /// Read off a single junction node.
    Junction,
    /// Fitted over every interior control sample (no usable junction).
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktSummary {
    /// Per control component.
    pub control_law: Vec<f64>,
    pub complementarity: f64,
    pub adjoint: AdjointResidual,
}

impl KktSummary {
    pub fn control_law_max(&self) -> f64 {
        self.control_law.iter().fold(0.0, |a, b| a.max(*b))
    }

    /// Single number for tables: the largest of the control-law,
    /// complementarity and windowed adjoint residuals.
    pub fn combined(&self) -> f64 {
        self.control_law_max().max(self.complementarity).max(self.adjoint.windowed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub costate: CostateTrajectory,
    pub alpha: f64,
    pub alpha_source: AlphaSource,
    pub junction: Option<JunctionPoint>,
    pub multipliers: MultiplierPair,
    /// Nodes whose neighbourhood is left out of the windowed adjoint residual.
    pub kink_nodes: Vec<usize>,
    pub kkt: KktSummary,
}

/// Recovers costate and multipliers from a DR outcome and evaluates the
/// optimality residuals on the solve grid.
pub fn analyze(outcome: &DrOutcome, sys: &SampledSystem, spec: &ProblemSpec, tol: ActiveTolerance) -> Result<Analysis> {
    let solution = &outcome.solution;
    let junctions = detect_junctions(&solution.u, spec.control_bounds(), tol);
    let (costate, alpha, alpha_source, junction) = match recover_costate(&outcome.costate_dr, solution, sys, &junctions) {
        Ok(rec) => (rec.lambda, rec.alpha, AlphaSource::Junction, Some(rec.junction)),
        Err(Error::NoUsableJunction) => {
            let alpha = fit_costate_scale(&outcome.costate_dr, solution, sys, spec.control_bounds(), tol)?;
            (outcome.costate_dr.scaled(alpha), alpha, AlphaSource::LeastSquares, None)
        }
        Err(e) => return Err(e),
    };
    let multipliers = recover_multipliers(solution, &costate, sys, spec.state_bounds(), tol)?;

    let mut kink_nodes: Vec<usize> = junctions.iter().flat_map(|j| [j.node_index, j.saturated_node]).collect();
    kink_nodes.extend(state_transition_nodes(&solution.x, spec.state_bounds(), tol));
    kink_nodes.sort_unstable();
    kink_nodes.dedup();

    let kkt = KktSummary {
        control_law: control_law_residual(solution, &costate, sys, spec.control_bounds())?,
        complementarity: complementarity_residual(solution, &multipliers, spec.state_bounds()),
        adjoint: adjoint_residual(solution, &costate, &multipliers, sys, &kink_nodes, JUNCTION_WINDOW)?,
    };
    Ok(Analysis {
        costate,
        alpha,
        alpha_source,
        junction,
        multipliers,
        kink_nodes,
        kkt,
    })
}

/// `n` equally spaced interior points of (0, 1): `i/(n+1)`.
pub fn sweep_gammas(n_points: usize) -> Vec<f64> {
    (1..=n_points).map(|i| i as f64 / (n_points + 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub n_steps: usize,
    pub iterations: Option<usize>,
    pub terminated_by: Option<Termination>,
    pub kkt_residual: Option<f64>,
    pub error: Option<String>,
}

/// Runs DR for every sweep γ on a shared projector. Failures become rows.
pub fn gamma_sweep(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    n_points: usize,
    epsilon: f64,
    max_iterations: usize,
) -> Result<Vec<SweepRow>> {
    if n_points < 2 {
        return Err(Error::InvalidSettings(format!("a sweep needs at least 2 points, got {n_points}")));
    }
    let solver = DrSolver::new(spec, grid)?;
    let mut rows: Vec<SweepRow> = sweep_gammas(n_points)
        .into_par_iter()
        .map(|gamma| {
            let settings = DrSettings::new(gamma).with_epsilon(epsilon).with_max_iterations(max_iterations);
            let mut row = SweepRow {
                gamma,
                n_steps: grid.n_steps(),
                iterations: None,
                terminated_by: None,
                kkt_residual: None,
                error: None,
            };
            match solver.solve(&settings) {
                Ok(out) => {
                    row.iterations = Some(out.report.iterations);
                    row.terminated_by = Some(out.report.terminated_by);
                    match analyze(&out, solver.system(), spec, ActiveTolerance::default()) {
                        Ok(a) => row.kkt_residual = Some(a.kkt.combined()),
                        Err(e) => row.error = Some(e.to_string()),
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub repeats: usize,
    pub mean: f64,
    pub min: f64,
}

/// Wall time of complete cold solves (projector set-up included).
pub fn timing_report(spec: &ProblemSpec, grid: &TimeGrid, settings: &DrSettings, repeats: usize) -> Result<TimingReport> {
    if repeats == 0 {
        return Err(Error::InvalidSettings("repeats must be at least 1".into()));
    }
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let out = DrSolver::new(spec, grid)?.solve(settings)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(TimingReport {
        repeats,
        mean: times.iter().sum::<f64>() / repeats as f64,
        min: times.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Header of the trajectory CSV.
pub fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h.extend((1..=m).map(|j| format!("u_{j}")));
    h.extend((1..=n).map(|i| format!("lambda_{i}")));
    h.extend((1..=n).map(|i| format!("mu1_{i}")));
    h.extend((1..=n).map(|i| format!("mu2_{i}")));
    h
}

/// One row per node, every value with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    grid: &TimeGrid,
    pair: &TrajectoryPair,
    costate: &CostateTrajectory,
    mu: &MultiplierPair,
) -> io::Result<()> {
    let (n, m) = (pair.x.dim(), pair.u.dim());
    writeln!(w, "{}", trajectory_header(n, m).join(","))?;
    let mut line = String::new();
    for k in 0..pair.nodes() {
        line.clear();
        let values = std::iter::once(grid.node(k))
            .chain(pair.x.row(k).iter().copied())
            .chain(pair.u.row(k).iter().copied())
            .chain(costate.lambda.row(k).iter().copied())
            .chain(mu.mu1.row(k).iter().copied())
            .chain(mu.mu2.row(k).iter().copied());
        for (i, v) in values.enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "gamma,n_steps,iterations,terminated_by,kkt_residual,error")?;
    for r in rows {
        let term = match r.terminated_by {
            Some(Termination::ToleranceMet) => "ToleranceMet",
            Some(Termination::IterationCap) => "IterationCap",
            None => "",
        };
        let err = r.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        writeln!(
            w,
            "{:.16e},{},{},{},{},{}",
            r.gamma,
            r.n_steps,
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            term,
            r.kkt_residual.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            err
        )?;
    }
    Ok(())
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub n_steps: usize,
    pub t0: f64,
    pub tf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub linf_x: f64,
    pub linf_u: f64,
    pub oracle_kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub problem: String,
    pub settings: ReportSettings,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub final_residual: f64,
    pub objective: f64,
    pub wall_time: f64,
    pub kkt: Option<KktSummary>,
    pub alpha: Option<f64>,
    pub alpha_source: Option<AlphaSource>,
    /// Per state component, the largest multiplier of the upper and lower bound.
    pub max_mu1: Option<Vec<f64>>,
    pub max_mu2: Option<Vec<f64>>,
    pub analysis_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingReport>,
}

impl RunReport {
    pub fn new(problem: &str, settings: &DrSettings, grid: &TimeGrid, outcome: &DrOutcome, analysis: &Result<Analysis>) -> Self {
        let r = &outcome.report;
        let column_max = |m: &crate::model::NodeMatrix| -> Vec<f64> {
            (0..m.dim()).map(|i| m.component(i).into_iter().fold(0.0, f64::max)).collect()
        };
        let (kkt, alpha, alpha_source, max_mu1, max_mu2, analysis_error) = match analysis {
            Ok(a) => (
                Some(a.kkt.clone()),
                Some(a.alpha),
                Some(a.alpha_source),
                Some(column_max(&a.multipliers.mu1)),
                Some(column_max(&a.multipliers.mu2)),
                None,
            ),
            Err(e) => (None, None, None, None, None, Some(e.to_string())),
        };
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            problem: problem.to_string(),
            settings: ReportSettings {
                gamma: settings.gamma,
                epsilon: settings.epsilon,
                max_iterations: settings.max_iterations,
                n_steps: grid.n_steps(),
                t0: grid.t0(),
                tf: grid.tf(),
            },
            iterations: r.iterations,
            terminated_by: r.terminated_by,
            final_residual: r.final_residual(),
            objective: r.objective_value,
            wall_time: r.wall_time,
            kkt,
            alpha,
            alpha_source,
            max_mu1,
            max_mu2,
            analysis_error,
            oracle: None,
            timing: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, NodeMatrix};
    use crate::problems::{builtin_problem, BuiltinProblem, ProblemCase};

    #[test]
    fn two_point_sweep_is_thirds() {
        let g = sweep_gammas(2);
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-15 && (g[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_single_point() {
        let (spec, _) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
        let grid = build_grid(spec.t0(), spec.tf(), 20).unwrap();
        assert!(matches!(gamma_sweep(&spec, &grid, 1, 1e-8, 10), Err(Error::InvalidSettings(_))));
    }

    #[test]
    fn sweep_rows_are_sorted_and_complete() {
        let (spec, _) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
        let grid = build_grid(spec.t0(), spec.tf(), 40).unwrap();
        let rows = gamma_sweep(&spec, &grid, 5, 1e-8, 30).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.windows(2).all(|w| w[0].gamma < w[1].gamma));
        assert!(rows.iter().all(|r| r.n_steps == 40 && r.iterations.is_some()));
    }

    #[test]
    fn single_repeat_mean_is_min() {
        let (spec, g) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
        let grid = build_grid(spec.t0(), spec.tf(), 30).unwrap();
        let t = timing_report(&spec, &grid, &DrSettings::new(g), 1).unwrap();
        assert_eq!(t.mean, t.min);
        assert!(timing_report(&spec, &grid, &DrSettings::new(g), 0).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let grid = build_grid(0.0, 1.0, 3).unwrap();
        let pair = TrajectoryPair::zeros(4, 2, 1);
        let lam = CostateTrajectory::new(NodeMatrix::zeros(4, 2));
        let mu = MultiplierPair::zeros(4, 2);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &grid, &pair, &lam, &mu).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2,u_1,lambda_1,lambda_2,mu1_1,mu1_2,mu2_1,mu2_2");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4].split(',').next().unwrap().parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let grid = build_grid(0.0, 1.0, 2).unwrap();
        let v = 0.1 + 0.2;
        let pair = TrajectoryPair {
            x: NodeMatrix::from_fn(3, 1, |_, _| v),
            u: NodeMatrix::zeros(3, 1),
        };
        let mut buf = Vec::new();
        write_trajectory_csv(
            &mut buf,
            &grid,
            &pair,
            &CostateTrajectory::new(NodeMatrix::zeros(3, 1)),
            &MultiplierPair::zeros(3, 1),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
    }
}
