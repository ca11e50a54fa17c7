//! Solver bridge for greenplan models: LP and MPS writers, an external MILP
//! solver driven as a subprocess, solution file parsers, and an exhaustive
//! exact solver used as the correctness oracle on small instances.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub mod enumerate;
pub mod external;
pub mod lp;
pub mod mps;
pub mod parse;
pub mod text;

pub use enumerate::{solve_enumerate, DEFAULT_MAX_BINARIES};
pub use external::solve;
pub use lp::export_lp;
pub use mps::export_mps;

/// Distance from 0 or 1 within which a parsed binary is accepted.
pub const BINARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("name `{name}` exceeds the {limit}-character limit of the file format")]
    NameTooLong { name: String, limit: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("cannot run solver `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("solver exited with {status}: {stderr}")]
    Subprocess { status: String, stderr: String },
    #[error("i/o error in solver workspace: {0}")]
    Io(#[from] std::io::Error),
    #[error("unparseable solution file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution names unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("solution has no value for `{0}`")]
    MissingValue(String),
    #[error("`{name}` = {value} violates its bounds [{lower}, {upper}]")]
    OutOfBounds { name: String, value: f64, lower: f64, upper: f64 },
    #[error("reported objective {reported} differs from recomputed {recomputed}")]
    ObjectiveMismatch { reported: f64, recomputed: f64 },
    #[error("model has {found} free binaries, enumeration limit is {limit}")]
    TooManyBinaries { found: usize, limit: usize },
    #[error("model shape not supported by enumeration: {0}")]
    Unsupported(String),
}

/// Which file format the model is handed to an external solver in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelFormat {
    #[default]
    Lp,
    Mps,
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Lp => "lp",
            Self::Mps => "mps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverKind {
    /// Program and argument template. Placeholders `{model}`, `{solution}`,
    /// `{start}`, `{time_limit}`, `{gap}` and `{threads}` are substituted;
    /// an argument containing `{start}` is dropped when no start is given.
    External { program: PathBuf, args: Vec<String> },
    /// Exhaustive enumeration over at most `max_binaries` free installation
    /// binaries.
    Enumerate { max_binaries: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub format: ModelFormat,
    /// Wall-clock limit handed to the solver, seconds.
    pub time_limit: f64,
    /// Relative MIP gap at which the solver may stop.
    pub mip_gap: f64,
    pub threads: usize,
    /// Keep the temporary model and solution files instead of deleting them.
    pub keep_files: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Enumerate { max_binaries: DEFAULT_MAX_BINARIES },
            format: ModelFormat::Lp,
            time_limit: 3600.0,
            mip_gap: 0.0,
            threads: 1,
            keep_files: false,
        }
    }
}

impl SolverConfig {
    /// Default argument template of the bundled HiGHS adapter script.
    pub fn highs_adapter(script: impl Into<PathBuf>) -> Self {
        let args = [
            "{model}",
            "{solution}",
            "--time-limit",
            "{time_limit}",
            "--gap",
            "{gap}",
            "--threads",
            "{threads}",
            "--start={start}",
        ];
        Self {
            kind: SolverKind::External { program: script.into(), args: args.iter().map(|s| s.to_string()).collect() },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.mip_gap >= 0.0) {
            return Err(SolverError::Config(format!("MIP gap must be non-negative, got {}", self.mip_gap)));
        }
        if !(self.time_limit > 0.0) {
            return Err(SolverError::Config(format!("time limit must be positive, got {}", self.time_limit)));
        }
        if self.threads == 0 {
            return Err(SolverError::Config("thread count must be at least 1".into()));
        }
        if let SolverKind::External { args, .. } = &self.kind {
            if !args.iter().any(|a| a.contains("{model}")) || !args.iter().any(|a| a.contains("{solution}")) {
                return Err(SolverError::Config("argument template needs {model} and {solution}".into()));
            }
        }
        Ok(())
    }

    /// Short label recorded in plan provenance and manifests.
    pub fn label(&self) -> String {
        match &self.kind {
            SolverKind::External { program, .. } => program.display().to_string(),
            SolverKind::Enumerate { max_binaries } => format!("enumerate(max_binaries={max_binaries})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Integer solution whose optimality is proven only up to `gap`.
    Feasible {
        gap: Option<f64>,
    },
    Infeasible,
    /// Time limit hit; an incumbent may still be attached.
    Timeout,
    Error(String),
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Feasible { .. } => "feasible",
            Self::Infeasible => "infeasible",
            Self::Timeout => "timeout",
            Self::Error(_) => "error",
        }
    }

    /// Whether the status comes with a complete integer solution.
    pub fn has_solution(&self) -> bool {
        matches!(self, Self::Optimal | Self::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    /// Objective value including the constant term.
    pub objective: Option<f64>,
    /// Variable name to value.
    pub values: BTreeMap<String, f64>,
    pub wall_time: Duration,
    /// Best proven lower bound, when the solver reports one.
    pub bound: Option<f64>,
    /// Relative gap at termination, when known.
    pub gap: Option<f64>,
}

impl RawSolution {
    pub fn without_values(status: SolveStatus, wall_time: Duration) -> Self {
        Self { status, objective: None, values: BTreeMap::new(), wall_time, bound: None, gap: None }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close_relative(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
