//! Shared fixtures for the command-line and acceptance tests.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use greenplan_solver::{ModelFormat, SolverConfig};

/// Path of the bundled HiGHS adapter when `highspy` can be imported.
pub fn highs_adapter() -> Option<PathBuf> {
    let script = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../tools/highs_solve.py"));
    let ok =
        Command::new("python3").args(["-c", "import highspy"]).output().map(|o| o.status.success()).unwrap_or(false);
    ok.then_some(script)
}

/// Single-threaded HiGHS configuration.
pub fn highs(format: ModelFormat, gap: f64, time_limit: f64) -> Option<SolverConfig> {
    highs_adapter().map(|script| SolverConfig {
        format,
        mip_gap: gap,
        time_limit,
        threads: 1,
        ..SolverConfig::highs_adapter(script)
    })
}

/// Runs the `greenplan` binary without a solver taken from the environment.
pub fn greenplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenplan"))
        .args(args)
        .env_remove("GREENPLAN_SOLVER")
        .output()
        .expect("greenplan runs")
}
