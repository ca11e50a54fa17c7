//! Command-line runner for greenplan scenario studies: solve and compare the
//! eight planning scenarios, sweep carbon taxes, export models and check
//! solution files.

pub mod artifacts;
pub mod error;
pub mod pipeline;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use greenplan_core::validate::{check_feasibility, check_scenario, compute_costs, ENERGY_TOLERANCE};
use greenplan_core::{build_model, bundled, ModelTables, PlanSolution, PlanningInstance, ScenarioId};
use greenplan_solver::{export_lp, export_mps, ModelFormat, SolverConfig, SolverKind, DEFAULT_MAX_BINARIES};

use crate::artifacts::{
    costs_csv, energy_csv, sha256_hex, sweep_csv, write_scenario, OutputDir, RunManifest, ScenarioRecord,
};
pub use crate::error::CliError;
use crate::pipeline::{solve_scenarios, tax_sweep, with_tax};

/// Prints a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Environment variable naming the default solver.
pub const SOLVER_ENV: &str = "GREENPLAN_SOLVER";

/// Solver name that selects exhaustive enumeration.
pub const ENUMERATE: &str = "enumerate";

#[derive(Debug, Parser)]
#[command(name = "greenplan", version, about = "Green cellular network upgrade planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve scenarios and write cost, energy, plan and assignment files.
    Run(RunArgs),
    /// Solve one scenario under a range of carbon-tax schedules.
    Sweep(SweepArgs),
    /// Write the model of each scenario without solving.
    Export(ExportArgs),
    /// Check a solution file against an instance and scenario.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Bundled instance name or path to an instance file.
    #[arg(long)]
    pub instance: String,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// `enumerate`, or the path of a solver program speaking the
    /// highs_solve.py protocol.
    #[arg(long, env = SOLVER_ENV, default_value = ENUMERATE)]
    pub solver: String,
    /// Wall-clock limit per solve, seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// Relative MIP gap at which the solver may stop.
    #[arg(long, default_value_t = 0.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Free installation binaries the enumeration solver accepts.
    #[arg(long, default_value_t = DEFAULT_MAX_BINARIES)]
    pub max_binaries: usize,
    /// Keep the solver's temporary files.
    #[arg(long)]
    pub keep_files: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Lp,
    Mps,
}

impl From<FormatArg> for ModelFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Lp => ModelFormat::Lp,
            FormatArg::Mps => ModelFormat::Mps,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Scenarios to solve, comma separated or repeated; all eight by default.
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Carbon tax of the first year, $/ton; replaces the instance schedule.
    #[arg(long)]
    pub tax_start: Option<f64>,
    /// Yearly increase of the carbon tax, $/ton.
    #[arg(long, requires = "tax_start")]
    pub tax_step: Option<f64>,
    /// Model file format handed to an external solver.
    #[arg(long, value_enum, default_value = "lp")]
    pub format: FormatArg,
    /// Dump assignments for the peak-traffic period only.
    #[arg(long)]
    pub peak_only: bool,
    /// Solve each scenario from scratch instead of starting from the best
    /// plan of the scenarios it relaxes.
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "S+Z")]
    pub scenario: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// First-year tax of each level, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0])]
    pub tax_start: Vec<f64>,
    /// Yearly tax increase of each level, comma separated; one value per
    /// `--tax-start` value, or a single value for all levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0])]
    pub tax_step: Vec<f64>,
    /// Also solve every level by enumeration and report its objective.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum, default_value = "lp")]
    pub format: FormatArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    #[arg(long)]
    pub tax_start: Option<f64>,
    #[arg(long, requires = "tax_start")]
    pub tax_step: Option<f64>,
    #[arg(long, value_enum, default_value = "lp")]
    pub format: FormatArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub scenario: String,
    /// Solution file in `name value` lines or HiGHS format.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub tax_start: Option<f64>,
    #[arg(long, requires = "tax_start")]
    pub tax_step: Option<f64>,
}

/// Loads a bundled instance by name, or an instance file by path. Returns
/// the instance and the text it was read from.
pub fn load_instance(spec: &str) -> Result<(PlanningInstance, String), CliError> {
    if let Some(text) = bundled::source(spec) {
        let inst = PlanningInstance::from_toml(text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
        return Ok((inst, text.to_string()));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "no instance `{spec}`: not a bundled name ({}) and no such file",
            bundled::names().collect::<Vec<_>>().join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
    let inst = PlanningInstance::from_toml(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
    Ok((inst, text))
}

/// Parses scenario names; an empty list means all eight.
pub fn parse_scenarios(names: &[String]) -> Result<Vec<ScenarioId>, CliError> {
    if names.is_empty() {
        return Ok(ScenarioId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let id: ScenarioId =
            n.trim().parse().map_err(|e: greenplan_core::scenario::UnknownScenario| CliError::Usage(e.to_string()))?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out.sort();
    Ok(out)
}

pub fn solver_config(args: &SolverArgs, format: FormatArg) -> Result<SolverConfig, CliError> {
    let base = if args.solver == ENUMERATE {
        SolverConfig { kind: SolverKind::Enumerate { max_binaries: args.max_binaries }, ..SolverConfig::default() }
    } else {
        SolverConfig::highs_adapter(&args.solver)
    };
    let config = SolverConfig {
        format: format.into(),
        time_limit: args.time_limit,
        mip_gap: args.gap,
        threads: args.threads,
        keep_files: args.keep_files,
        ..base
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn tax_override(inst: PlanningInstance, start: Option<f64>, step: Option<f64>) -> (PlanningInstance, Vec<(f64, f64)>) {
    match start {
        Some(s) => {
            let step = step.unwrap_or(0.0);
            (with_tax(&inst, s, step), vec![(s, step)])
        }
        None => (inst, Vec::new()),
    }
}

fn tables(inst: &PlanningInstance) -> Result<ModelTables, CliError> {
    ModelTables::build(inst).map_err(|e| CliError::Usage(e.to_string()))
}

fn manifest(
    command: &str,
    instance: &str,
    text: &str,
    scenarios: &[ScenarioId],
    config: Option<&SolverConfig>,
) -> RunManifest {
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        instance: instance.to_string(),
        instance_sha256: sha256_hex(text.as_bytes()),
        scenarios: scenarios.iter().map(|s| s.as_str().to_string()).collect(),
        solver: config.map_or_else(|| "none".into(), SolverConfig::label),
        time_limit: config.map_or(0.0, |c| c.time_limit),
        mip_gap: config.map_or(0.0, |c| c.mip_gap),
        threads: config.map_or(0, |c| c.threads),
        seed: 0,
        warm_start: false,
        tax: Vec::new(),
        format: config.map(|c| c.format.extension().to_string()),
        results: Vec::new(),
        files: Default::default(),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let scenarios = parse_scenarios(&args.scenario)?;
    let config = solver_config(&args.solver, args.format)?;
    let (inst, text) = load_instance(&args.instance.instance)?;
    let (inst, tax) = tax_override(inst, args.tax_start, args.tax_step);
    let tables = tables(&inst)?;
    let outcomes = solve_scenarios(&inst, &tables, &scenarios, &config, !args.no_warm_start)?;

    let mut out = OutputDir::create(&args.out)?;
    for o in &outcomes {
        write_scenario(&mut out, &inst, o, args.peak_only)?;
    }
    out.write("costs.csv", &costs_csv(&outcomes)?)?;
    out.write("energy.csv", &energy_csv(&outcomes)?)?;
    let mut m = manifest("run", &args.instance.instance, &text, &scenarios, Some(&config));
    m.warm_start = !args.no_warm_start;
    m.tax = tax;
    m.results = outcomes.iter().map(|o| ScenarioRecord::of(&inst, o)).collect();
    m.write(&mut out)?;

    for o in &outcomes {
        say!(
            "{:<5} {:<9} Z = {}{}",
            o.scenario.as_str(),
            o.status.as_str(),
            o.objective,
            if o.is_valid() { "" } else { "  INVALID" }
        );
    }
    let invalid: Vec<&str> = outcomes.iter().filter(|o| !o.is_valid()).map(|o| o.scenario.as_str()).collect();
    if !invalid.is_empty() {
        return Err(CliError::Invalid(format!("scenarios {} produced invalid plans", invalid.join(", "))));
    }
    Ok(())
}

/// Pairs `--tax-start` with `--tax-step` values.
pub fn tax_levels(starts: &[f64], steps: &[f64]) -> Result<Vec<(f64, f64)>, CliError> {
    match steps.len() {
        1 => Ok(starts.iter().map(|&s| (s, steps[0])).collect()),
        n if n == starts.len() => Ok(starts.iter().copied().zip(steps.iter().copied()).collect()),
        n => Err(CliError::Usage(format!("{} tax starts but {n} tax steps", starts.len()))),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = parse_scenarios(std::slice::from_ref(&args.scenario))?[0];
    if !scenario.spec().uses_solar() {
        return Err(CliError::Usage(format!("scenario {scenario} does not allow solar operation")));
    }
    let levels = tax_levels(&args.tax_start, &args.tax_step)?;
    let config = solver_config(&args.solver, args.format)?;
    let oracle = args.oracle.then(|| SolverConfig {
        kind: SolverKind::Enumerate { max_binaries: args.solver.max_binaries },
        ..SolverConfig::default()
    });
    let (inst, text) = load_instance(&args.instance.instance)?;
    let tables = tables(&inst)?;
    let rows = tax_sweep(&inst, &tables, scenario, &levels, &config, oracle.as_ref())?;

    let mut out = OutputDir::create(&args.out)?;
    out.write("sweep.csv", &sweep_csv(&rows)?)?;
    let mut m = manifest("sweep", &args.instance.instance, &text, &[scenario], Some(&config));
    m.warm_start = true;
    m.tax = levels;
    m.results = rows.iter().map(|r| ScenarioRecord::of(&inst, &r.outcome)).collect();
    m.write(&mut out)?;

    for r in &rows {
        say!(
            "tax ({}, {}): Z = {} solar stations = {}{}",
            r.tax_start,
            r.tax_step,
            r.outcome.objective,
            r.solar_count,
            if r.oracle_agrees() { "" } else { "  ORACLE MISMATCH" }
        );
    }
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.outcome.is_valid() || !r.oracle_agrees())
        .map(|r| format!("({}, {})", r.tax_start, r.tax_step))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Invalid(format!("tax levels {} failed validation", bad.join(", "))));
    }
    Ok(())
}

pub fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let scenarios = parse_scenarios(&args.scenario)?;
    let (inst, text) = load_instance(&args.instance.instance)?;
    let (inst, tax) = tax_override(inst, args.tax_start, args.tax_step);
    let tables = tables(&inst)?;
    let format: ModelFormat = args.format.into();
    let mut out = OutputDir::create(&args.out)?;
    for &id in &scenarios {
        let model = build_model(&inst, &tables, id.spec()).map_err(|e| CliError::Usage(e.to_string()))?;
        let body = match format {
            ModelFormat::Lp => export_lp(&model),
            ModelFormat::Mps => export_mps(&model),
        }
        .map_err(|e| CliError::Solver(e.to_string()))?;
        let path = out.write(&format!("{}.{}", id.slug(), format.extension()), body.as_bytes())?;
        say!("{}", path.display());
    }
    let mut m = manifest("export", &args.instance.instance, &text, &scenarios, None);
    m.format = Some(format.extension().to_string());
    m.tax = tax;
    m.write(&mut out)?;
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let scenario = parse_scenarios(std::slice::from_ref(&args.scenario))?[0];
    let (inst, _) = load_instance(&args.instance.instance)?;
    let (inst, _) = tax_override(inst, args.tax_start, args.tax_step);
    let tables = tables(&inst)?;
    let parsed = artifacts::read_solution(&args.solution)?;
    let plan = PlanSolution::from_named_values(&inst, parsed.values.iter().map(|(k, &v)| (k.as_str(), v)))
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.solution.display())))?;
    let mut report =
        check_feasibility(&inst, &tables, &plan, ENERGY_TOLERANCE).map_err(|e| CliError::Usage(e.to_string()))?;
    report.violations.extend(check_scenario(&inst, &plan, scenario.spec()).violations);
    say!("{report}");
    if !report.is_feasible() {
        return Err(CliError::Invalid(format!("{} violations", report.violations.len())));
    }
    let costs = compute_costs(&inst, &tables, &plan, None).map_err(|e| CliError::Invalid(e.to_string()))?;
    say!("Z = {} (capital {}, operating {})", costs.total, costs.capital, costs.operating);
    if let Some(reported) = parsed.objective {
        if !greenplan_solver::close_relative(reported, costs.total, pipeline::COST_TOLERANCE) {
            return Err(CliError::Invalid(format!(
                "file objective {reported} differs from priced cost {}",
                costs.total
            )));
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Export(a) => cmd_export(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("greenplan: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (program name first) and runs them. Argument errors exit
/// with 64; `--help` and `--version` exit with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
