//! Kept in its own target so no other test competes for the CPU.

use drocp_core::harness::timing_report;
use drocp_core::{build_grid, builtin_problem, BuiltinProblem, DrSettings, ProblemCase};

#[test]
fn solve_time_scales_linearly_in_grid_size() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Psm, ProblemCase::Case1);
    let settings = DrSettings::new(gamma);
    let coarse = timing_report(&spec, &build_grid(spec.t0(), spec.tf(), 1_000).unwrap(), &settings, 5).unwrap();
    let fine = timing_report(&spec, &build_grid(spec.t0(), spec.tf(), 10_000).unwrap(), &settings, 5).unwrap();
    let ratio = fine.min / coarse.min;
    eprintln!("psm case 1: {:.3e}s at N=1e3, {:.3e}s at N=1e4, ratio {ratio:.2}", coarse.min, fine.min);
    assert!((5.0..=15.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn oscillator_solve_time_is_in_the_expected_range() {
    let (spec, gamma) = builtin_problem(BuiltinProblem::Pho, ProblemCase::Case1);
    let grid = build_grid(spec.t0(), spec.tf(), 1_000).unwrap();
    let t = timing_report(&spec, &grid, &DrSettings::new(gamma), 20).unwrap();
    eprintln!("pho case 1, N=1e3: mean {:.3e}s min {:.3e}s", t.mean, t.min);
    assert!(t.min <= t.mean);
    assert!(t.mean > 1e-4 && t.mean < 1.0, "mean {}", t.mean);
}
