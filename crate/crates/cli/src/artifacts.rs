//! Files a run leaves behind: cost and energy tables, per-scenario solution
//! dumps, installation timelines, assignment maps and the run manifest.
//! Every file is written to a temporary name and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use greenplan_core::report::{cost_row, energy_row, format_number, COST_COLUMNS, ENERGY_COLUMNS};
use greenplan_core::{PlanSolution, PlanningInstance};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::pipeline::{ScenarioOutcome, SweepRow};

/// Column order of sweep tables.
pub const SWEEP_COLUMNS: [&str; 7] = ["tax_start", "tax_step", "Z", "E_G", "CO2", "solar_count", "oracle_Z"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects written files and their checksums, keyed by path relative to
/// the output directory.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub checksums: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, checksums: BTreeMap::new() })
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("partial");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        self.checksums.insert(relative.to_string(), sha256_hex(bytes));
        Ok(path)
    }
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn costs_csv(outcomes: &[ScenarioOutcome]) -> Result<Vec<u8>, CliError> {
    to_csv(&COST_COLUMNS, outcomes.iter().filter_map(|o| o.costs.as_ref().map(|c| cost_row(o.scenario.as_str(), c))))
}

pub fn energy_csv(outcomes: &[ScenarioOutcome]) -> Result<Vec<u8>, CliError> {
    to_csv(
        &ENERGY_COLUMNS,
        outcomes.iter().filter_map(|o| o.energy.as_ref().map(|e| energy_row(o.scenario.as_str(), e))),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    to_csv(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            let energy = r.outcome.energy.as_ref();
            vec![
                format_number(r.tax_start),
                format_number(r.tax_step),
                format_number(r.outcome.objective),
                energy.map_or_else(|| "NA".into(), |e| format_number(e.grid)),
                energy.map_or_else(|| "NA".into(), |e| format_number(e.co2_tons)),
                r.solar_count.to_string(),
                r.oracle_objective.map_or_else(|| "NA".into(), format_number),
            ]
        }),
    )
}

/// Solution in `name value` lines under `# status` and `# objective`
/// headers, readable by the `validate` command.
pub fn solution_text(o: &ScenarioOutcome) -> String {
    let mut out = format!("# status {}\n# objective {}\n", o.status.as_str(), format_number(o.objective));
    out.push_str(&greenplan_solver::parse::write_generic(&o.values));
    out
}

/// Which type went up on which site in which year.
pub fn timeline_csv(inst: &PlanningInstance, plan: &PlanSolution) -> Result<Vec<u8>, CliError> {
    let mut rows = Vec::new();
    for j in inst.n_existing()..inst.sites.len() {
        for (l, ty) in inst.bs_types.iter().enumerate().skip(1) {
            for q in 1..=inst.years {
                if plan.z(l, j, q) == 1 {
                    rows.push(vec![
                        inst.sites[j].id.to_string(),
                        ty.id.to_string(),
                        ty.name.clone(),
                        q.to_string(),
                        ty.is_solar().to_string(),
                    ]);
                }
            }
        }
    }
    to_csv(&["site", "type", "type_name", "year", "solar"], rows)
}

/// Period with the highest traffic (the first one on ties).
pub fn peak_period(inst: &PlanningInstance) -> usize {
    let mut best = 0;
    for (t, &f) in inst.traffic_profile.iter().enumerate() {
        if f > inst.traffic_profile[best] {
            best = t;
        }
    }
    best + 1
}

/// Test point to serving site map per year and period, with the state the
/// serving station runs in (`legacy` for existing sites) and whether it
/// runs on its battery.
pub fn assignments_csv(inst: &PlanningInstance, plan: &PlanSolution, peak_only: bool) -> Result<Vec<u8>, CliError> {
    let periods: Vec<usize> = if peak_only { vec![peak_period(inst)] } else { (1..=inst.periods()).collect() };
    let mut rows = Vec::new();
    for q in 1..=inst.years {
        for &t in &periods {
            for (i, tp) in inst.test_points.iter().enumerate() {
                let Some(j) = plan.serving_site(i, q, t) else { continue };
                let (state, battery) = match plan.running_state(j, q, t) {
                    Some((l, s)) => (format!("{l}:{s}"), plan.u(j, q, t) == 1),
                    None => ("legacy".to_string(), false),
                };
                rows.push(vec![
                    q.to_string(),
                    t.to_string(),
                    tp.id.to_string(),
                    inst.sites[j].id.to_string(),
                    state,
                    battery.to_string(),
                ]);
            }
        }
    }
    to_csv(&["year", "period", "test_point", "site", "state", "battery"], rows)
}

/// Per-scenario files under `<slug>/`.
pub fn write_scenario(
    out: &mut OutputDir,
    inst: &PlanningInstance,
    o: &ScenarioOutcome,
    peak_only: bool,
) -> Result<(), CliError> {
    let dir = o.scenario.slug();
    out.write(&format!("{dir}/solution.sol"), solution_text(o).as_bytes())?;
    out.write(&format!("{dir}/violations.txt"), format!("{}\n", o.violations).as_bytes())?;
    out.write(&format!("{dir}/timeline.csv"), &timeline_csv(inst, &o.plan)?)?;
    out.write(&format!("{dir}/assignments.csv"), &assignments_csv(inst, &o.plan, peak_only)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    pub status: String,
    pub objective: f64,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub valid: bool,
    pub solar_installations: usize,
}

impl ScenarioRecord {
    pub fn of(inst: &PlanningInstance, o: &ScenarioOutcome) -> Self {
        Self {
            scenario: o.scenario.as_str().to_string(),
            status: o.status.as_str().to_string(),
            objective: o.objective,
            bound: o.bound,
            gap: o.gap,
            valid: o.is_valid(),
            solar_installations: o.solar_installations(inst),
        }
    }
}

/// Inputs and outputs of one command, enough to repeat it.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub instance: String,
    pub instance_sha256: String,
    pub scenarios: Vec<String>,
    pub solver: String,
    pub time_limit: f64,
    pub mip_gap: f64,
    pub threads: usize,
    /// Seed handed to the solver's randomised components.
    pub seed: u64,
    pub warm_start: bool,
    /// `(start, step)` of every tax schedule used, when overridden.
    pub tax: Vec<(f64, f64)>,
    pub format: Option<String>,
    pub results: Vec<ScenarioRecord>,
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    /// Writes `manifest.json` listing every file written so far.
    pub fn write(mut self, out: &mut OutputDir) -> Result<PathBuf, CliError> {
        self.files = out.checksums.clone();
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        out.write("manifest.json", text.as_bytes())
    }
}

/// Reads a solution file written by [`solution_text`] or by an external
/// solver.
pub fn read_solution(path: &Path) -> Result<greenplan_solver::parse::ParsedSolution, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    greenplan_solver::parse::parse_solution(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
