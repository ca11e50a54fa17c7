//! External MILP solver driven as a subprocess.
//!
//! Each call creates a fresh temporary directory holding `model.lp` or
//! `model.mps`, the optional `start.sol` and the solver's `solution.sol`.
//! The directory is deleted when the call returns unless
//! [`SolverConfig::keep_files`] is set, in which case its path is logged.
//! Concurrent calls never share files.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::Instant;

use greenplan_core::model::VarKind;
use greenplan_core::MilpModel;

use crate::parse::{parse_solution, parse_stdout_summary, write_generic};
use crate::{
    close_relative, export_lp, export_mps, solve_enumerate, ModelFormat, RawSolution, SolveStatus, SolverConfig,
    SolverError, SolverKind, BINARY_TOLERANCE,
};

/// Relative tolerance of the reported-versus-recomputed objective check.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// Absolute tolerance on variable bounds of parsed values.
pub const BOUND_TOLERANCE: f64 = 1e-6;

/// Solves `model` with the configured solver.
pub fn solve(model: &MilpModel, config: &SolverConfig) -> Result<RawSolution, SolverError> {
    solve_with_start(model, config, None)
}

/// Like [`solve`], handing `start` to the solver as an initial incumbent when
/// the argument template has a `{start}` placeholder.
pub fn solve_with_start(
    model: &MilpModel,
    config: &SolverConfig,
    start: Option<&BTreeMap<String, f64>>,
) -> Result<RawSolution, SolverError> {
    config.validate()?;
    let (program, template) = match &config.kind {
        SolverKind::Enumerate { max_binaries } => return solve_enumerate(model, *max_binaries),
        SolverKind::External { program, args } => (program, args),
    };
    let dir = tempfile::Builder::new().prefix("greenplan-").tempdir()?;
    let model_path = dir.path().join(format!("model.{}", config.format.extension()));
    let solution_path = dir.path().join("solution.sol");
    let start_path = dir.path().join("start.sol");
    let text = match config.format {
        ModelFormat::Lp => export_lp(model)?,
        ModelFormat::Mps => export_mps(model)?,
    };
    fs::write(&model_path, text)?;
    if let Some(values) = start {
        fs::write(&start_path, write_generic(values))?;
    }
    let mut args = Vec::with_capacity(template.len());
    for arg in template {
        if arg.contains("{start}") && start.is_none() {
            continue;
        }
        args.push(
            arg.replace("{model}", &model_path.to_string_lossy())
                .replace("{solution}", &solution_path.to_string_lossy())
                .replace("{start}", &start_path.to_string_lossy())
                .replace("{time_limit}", &config.time_limit.to_string())
                .replace("{gap}", &config.mip_gap.to_string())
                .replace("{threads}", &config.threads.to_string()),
        );
    }
    log::debug!("running {} {}", program.display(), args.join(" "));
    let clock = Instant::now();
    let output = Command::new(program)
        .args(&args)
        .output()
        .map_err(|source| SolverError::Spawn { program: program.display().to_string(), source })?;
    let wall_time = clock.elapsed();
    if config.keep_files {
        let kept = dir.keep();
        log::info!("solver files kept in {}", kept.display());
        return finish(model, config, &output, &kept.join("solution.sol"), wall_time);
    }
    finish(model, config, &output, &solution_path, wall_time)
}

fn finish(
    model: &MilpModel,
    config: &SolverConfig,
    output: &std::process::Output,
    solution_path: &std::path::Path,
    wall_time: std::time::Duration,
) -> Result<RawSolution, SolverError> {
    if !output.status.success() {
        return Err(SolverError::Subprocess {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    let text = fs::read_to_string(solution_path)?;
    let parsed = parse_solution(&text)?;
    let (bound, gap) = parse_stdout_summary(&String::from_utf8_lossy(&output.stdout));
    let bound = parsed.bound.or(bound);
    let gap = parsed.gap.or(gap);
    let status = map_status(parsed.status.as_deref(), gap, config.mip_gap);
    let mut raw = RawSolution { status, objective: parsed.objective, values: parsed.values, wall_time, bound, gap };
    if !raw.values.is_empty() {
        complete_and_check(model, &mut raw)?;
    } else if raw.status.has_solution() {
        return Err(SolverError::Parse { line: 0, message: "solver reports a solution but wrote no values".into() });
    }
    Ok(raw)
}

/// Maps solver status text to a [`SolveStatus`].
pub fn map_status(text: Option<&str>, gap: Option<f64>, requested_gap: f64) -> SolveStatus {
    match text.unwrap_or("") {
        "optimal" => match gap {
            Some(g)
                if g > requested_gap.max(OBJECTIVE_TOLERANCE) || (requested_gap > 0.0 && g > OBJECTIVE_TOLERANCE) =>
            {
                SolveStatus::Feasible { gap: Some(g) }
            }
            _ => SolveStatus::Optimal,
        },
        "feasible" => SolveStatus::Feasible { gap },
        "infeasible" | "primal infeasible or unbounded" => SolveStatus::Infeasible,
        "time limit reached" | "timeout" => SolveStatus::Timeout,
        other => SolveStatus::Error(other.to_string()),
    }
}

/// Checks parsed values against the model: known names, bounds, integrality
/// and the reported objective. Variables the model never references in a
/// row or the objective may be absent from the solver output and take their
/// lower bound.
fn complete_and_check(model: &MilpModel, raw: &mut RawSolution) -> Result<(), SolverError> {
    let mut referenced = vec![false; model.variables.len()];
    for c in &model.constraints {
        for &(v, _) in &c.terms {
            referenced[v] = true;
        }
    }
    for &(v, _) in &model.objective {
        referenced[v] = true;
    }
    for name in raw.values.keys() {
        let parsed = name.parse().map_err(|_| SolverError::UnknownVariable(name.clone()))?;
        if model.var_id(&parsed).is_none() {
            return Err(SolverError::UnknownVariable(name.clone()));
        }
    }
    let mut values = vec![0.0; model.variables.len()];
    for (k, var) in model.variables.iter().enumerate() {
        let name = var.name.to_string();
        let value = match raw.values.get(&name) {
            Some(&x) => x,
            None if !referenced[k] || !raw.status.has_solution() => {
                let fill = var.lower.max(0.0).min(var.upper);
                raw.values.insert(name, fill);
                fill
            }
            None => return Err(SolverError::MissingValue(name)),
        };
        if value < var.lower - BOUND_TOLERANCE || value > var.upper + BOUND_TOLERANCE {
            return Err(SolverError::OutOfBounds {
                name: var.name.to_string(),
                value,
                lower: var.lower,
                upper: var.upper,
            });
        }
        if var.kind == VarKind::Binary && (value - value.round()).abs() > BINARY_TOLERANCE {
            return Err(SolverError::OutOfBounds { name: var.name.to_string(), value, lower: 0.0, upper: 1.0 });
        }
        values[k] = value;
    }
    let recomputed = model.objective_value(&values);
    match raw.objective {
        Some(reported) if !close_relative(reported, recomputed, OBJECTIVE_TOLERANCE) => {
            Err(SolverError::ObjectiveMismatch { reported, recomputed })
        }
        Some(_) => Ok(()),
        None => {
            raw.objective = Some(recomputed);
            Ok(())
        }
    }
}
