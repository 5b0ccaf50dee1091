use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use drocp_core::duals::ActiveTolerance;
use drocp_core::harness::{
    analyze, gamma_sweep, timing_report, write_sweep_csv, write_trajectory_csv, OracleCheck, RunReport,
};
use drocp_core::oracle::{solve_discretized_qp, OracleSettings};
use drocp_core::problems::problem_config_to_string;
use drocp_core::{
    build_grid, builtin_problem, linf_distance, load_problem_config, BuiltinProblem, CostateTrajectory, DrSettings,
    DrSolver, MultiplierPair, NodeMatrix, ProblemCase, ProblemSpec,
};

#[derive(Parser)]
#[command(name = "drocp", version, about = "Douglas-Rachford solver for box-constrained LQ optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write trajectory.csv and report.json (or sweep.csv).
    Solve(SolveArgs),
    /// Print a built-in problem as a JSON config.
    Config {
        #[arg(long)]
        problem: BuiltinProblem,
        #[arg(long, default_value = "1")]
        case: ProblemCase,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    problem: Option<BuiltinProblem>,
    /// JSON problem config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    case: ProblemCase,
    /// Number of time steps.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Overrides the preset of a built-in problem; required with --config.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = drocp_core::dr::DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = drocp_core::dr::DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[arg(long, default_value = "drocp-out")]
    out: PathBuf,
    /// Run DR at this many equally spaced gamma values and write sweep.csv.
    #[arg(long)]
    sweep_gamma: Option<usize>,
    /// Also solve the transcribed QP and report the distance to it.
    #[arg(long)]
    oracle_check: bool,
    /// Time this many cold solves.
    #[arg(long)]
    timing: Option<usize>,
}

fn load(args: &SolveArgs) -> Result<(ProblemSpec, Option<f64>, String)> {
    match (&args.problem, &args.config) {
        (Some(p), _) => {
            let (spec, gamma) = builtin_problem(*p, args.case);
            Ok((spec, Some(gamma), format!("{p}-case{}", args.case)))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec = load_problem_config(&text).with_context(|| format!("loading {}", path.display()))?;
            Ok((spec, None, path.display().to_string()))
        }
        (None, None) => bail!("one of --problem or --config is required"),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn solve(args: SolveArgs) -> Result<()> {
    let (spec, preset, name) = load(&args)?;
    let grid = build_grid(spec.t0(), spec.tf(), args.n)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    if let Some(points) = args.sweep_gamma {
        let rows = gamma_sweep(&spec, &grid, points, args.eps, args.max_iter)?;
        write_sweep_csv(create(&args.out, "sweep.csv")?, &rows)?;
        let converged = rows.iter().filter(|r| r.error.is_none()).count();
        println!("{name}: swept {} gamma values ({converged} ran cleanly)", rows.len());
        return Ok(());
    }

    let gamma = match args.gamma.or(preset) {
        Some(g) => g,
        None => bail!("--gamma is required with --config"),
    };
    let settings = DrSettings::new(gamma).with_epsilon(args.eps).with_max_iterations(args.max_iter);
    let solver = DrSolver::new(&spec, &grid)?;
    let outcome = solver.solve(&settings)?;
    let analysis = analyze(&outcome, solver.system(), &spec, ActiveTolerance::default());

    let mut report = RunReport::new(&name, &settings, &grid, &outcome, &analysis);
    if args.oracle_check {
        let qp = solve_discretized_qp(&spec, &grid, &OracleSettings::default()).context("qp oracle")?;
        let (linf_x, linf_u) = linf_distance(&outcome.solution, &qp.pair)?;
        report.oracle = Some(OracleCheck {
            linf_x,
            linf_u,
            oracle_kkt_residual: qp.kkt_residual,
        });
    }
    if let Some(repeats) = args.timing {
        report.timing = Some(timing_report(&spec, &grid, &settings, repeats)?);
    }

    let nodes = grid.n_nodes();
    let n = spec.state_dim();
    let (costate, multipliers) = match &analysis {
        Ok(a) => (a.costate.clone(), a.multipliers.clone()),
        Err(_) => {
            let nan = NodeMatrix::from_fn(nodes, n, |_, _| f64::NAN);
            (CostateTrajectory::new(nan.clone()), MultiplierPair { mu1: nan.clone(), mu2: nan })
        }
    };
    write_trajectory_csv(create(&args.out, "trajectory.csv")?, &grid, &outcome.solution, &costate, &multipliers)?;
    serde_json::to_writer_pretty(create(&args.out, "report.json")?, &report)?;

    println!(
        "{name}: {:?} after {} iterations, residual {:.3e}, objective {:.10}",
        report.terminated_by, report.iterations, report.final_residual, report.objective
    );
    if let Err(e) = &analysis {
        eprintln!("warning: costate recovery failed: {e}");
    }
    if let Some(o) = &report.oracle {
        println!("oracle distance: x {:.3e}, u {:.3e}", o.linf_x, o.linf_u);
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(args) => solve(args),
        Command::Config { problem, case } => {
            let (spec, _) = builtin_problem(problem, case);
            println!("{}", problem_config_to_string(&spec)?);
            Ok(())
        }
    }
}
