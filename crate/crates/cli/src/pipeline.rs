//! Scenario runs and carbon-tax sweeps: build, solve, validate and price.

use std::collections::BTreeMap;
use std::time::Duration;

use greenplan_core::economics::default_tax_schedule;
use greenplan_core::validate::{check_feasibility, check_scenario, compute_costs, compute_energy, ENERGY_TOLERANCE};
use greenplan_core::{
    apply_scenario, build_free_model, CostReport, EnergyReport, MilpModel, ModelTables, PlanSolution, PlanningInstance,
    ScenarioId, ViolationReport,
};
use greenplan_solver::external::solve_with_start;
use greenplan_solver::{close_relative, RawSolution, SolveStatus, SolverConfig};

use crate::error::CliError;

/// Relative tolerance between the solver objective and the validator's
/// recomputed total cost.
pub const COST_TOLERANCE: f64 = 1e-6;

/// Everything known about one solved scenario.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: ScenarioId,
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub wall_time: Duration,
    pub values: BTreeMap<String, f64>,
    pub plan: PlanSolution,
    pub violations: ViolationReport,
    /// `None` when the plan is infeasible and cannot be priced.
    pub costs: Option<CostReport>,
    pub energy: Option<EnergyReport>,
}

impl ScenarioOutcome {
    /// Whether the plan passed every check: feasibility, scenario rules and
    /// agreement of the priced cost with the solver objective.
    pub fn is_valid(&self) -> bool {
        self.violations.is_feasible()
            && self.costs.as_ref().is_some_and(|c| close_relative(c.total, self.objective, COST_TOLERANCE))
    }

    /// Number of solar-capable stations the plan installs.
    pub fn solar_installations(&self, inst: &PlanningInstance) -> usize {
        solar_installations(inst, &self.plan)
    }
}

pub fn solar_installations(inst: &PlanningInstance, plan: &PlanSolution) -> usize {
    let mut n = 0;
    for j in inst.n_existing()..inst.sites.len() {
        for (l, ty) in inst.bs_types.iter().enumerate().skip(1) {
            if ty.is_solar() {
                n += (1..=inst.years).map(|q| usize::from(plan.z(l, j, q))).sum::<usize>();
            }
        }
    }
    n
}

/// Replaces the instance's carbon tax by `start + step * (q - 1)`.
pub fn with_tax(inst: &PlanningInstance, start: f64, step: f64) -> PlanningInstance {
    let mut out = inst.clone();
    out.economics.carbon_tax = default_tax_schedule(start, step, inst.years);
    out
}

/// Orders scenarios so that each one comes after every scenario it relaxes.
pub fn solve_order(scenarios: &[ScenarioId]) -> Vec<ScenarioId> {
    let mut order: Vec<ScenarioId> = ScenarioId::ALL.iter().copied().filter(|s| scenarios.contains(s)).collect();
    // S+Z relaxes every other scenario
    if let Some(k) = order.iter().position(|&s| s == ScenarioId::SZ) {
        let sz = order.remove(k);
        order.push(sz);
    }
    order
}

/// Solves one model, handing `start` to solvers that accept one.
pub fn solve_model(
    model: &MilpModel,
    config: &SolverConfig,
    start: Option<&BTreeMap<String, f64>>,
) -> Result<RawSolution, CliError> {
    let raw = solve_with_start(model, config, start).map_err(|e| CliError::Solver(e.to_string()))?;
    if !raw.status.has_solution() {
        return Err(CliError::Solver(format!("solver returned no solution (status {})", raw.status.as_str())));
    }
    Ok(raw)
}

/// Validates and prices a raw solution of `scenario`.
pub fn assess(
    inst: &PlanningInstance,
    tables: &ModelTables,
    scenario: ScenarioId,
    raw: RawSolution,
    baseline: Option<&CostReport>,
) -> Result<ScenarioOutcome, CliError> {
    let plan =
        PlanSolution::from_named_values(inst, raw.pairs()).map_err(|e| CliError::Solver(format!("solution: {e}")))?;
    let mut violations =
        check_feasibility(inst, tables, &plan, ENERGY_TOLERANCE).map_err(|e| CliError::Invalid(e.to_string()))?;
    violations.violations.extend(check_scenario(inst, &plan, scenario.spec()).violations);
    let (costs, energy) = if violations.is_feasible() {
        let costs = compute_costs(inst, tables, &plan, baseline).map_err(|e| CliError::Invalid(e.to_string()))?;
        let energy = compute_energy(inst, tables, &plan).map_err(|e| CliError::Invalid(e.to_string()))?;
        (Some(costs), Some(energy))
    } else {
        (None, None)
    };
    Ok(ScenarioOutcome {
        scenario,
        objective: raw.objective.expect("solutions carry an objective"),
        status: raw.status,
        bound: raw.bound,
        gap: raw.gap,
        wall_time: raw.wall_time,
        values: raw.values,
        plan,
        violations,
        costs,
        energy,
    })
}

/// Solves `scenarios` on one instance. Scenarios run in nesting order and,
/// with `warm_start`, each solve starts from the best plan of the scenarios
/// it relaxes, so reported objectives respect the nesting even when the
/// solver stops at a gap. Results come back in reporting order, with cost
/// changes relative to scenario B when B is among them.
pub fn solve_scenarios(
    inst: &PlanningInstance,
    tables: &ModelTables,
    scenarios: &[ScenarioId],
    config: &SolverConfig,
    warm_start: bool,
) -> Result<Vec<ScenarioOutcome>, CliError> {
    let free = build_free_model(inst, tables).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut solved: Vec<ScenarioOutcome> = Vec::new();
    for id in solve_order(scenarios) {
        let mut model = free.clone();
        apply_scenario(&mut model, id.spec());
        for w in &model.warnings {
            log::warn!("{id}: {w}");
        }
        let start = if warm_start {
            solved
                .iter()
                .filter(|o| o.scenario.relaxations().contains(&id) && o.is_valid())
                .min_by(|a, b| a.objective.total_cmp(&b.objective))
                .map(|o| &o.values)
        } else {
            None
        };
        let raw = solve_model(&model, config, start)?;
        log::info!("{id}: {} objective {:?} in {:.2?}", raw.status.as_str(), raw.objective, raw.wall_time);
        solved.push(assess(inst, tables, id, raw, None)?);
    }
    solved.sort_by_key(|o| o.scenario);
    let base = solved.iter().find(|o| o.scenario == ScenarioId::B).and_then(|o| o.costs.clone());
    if let Some(base) = base {
        for o in &mut solved {
            if let Some(c) = o.costs.as_mut() {
                c.delta_pct = Some((c.total - base.total) / base.total * 100.0);
            }
        }
    }
    Ok(solved)
}

/// One level of a carbon-tax sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub tax_start: f64,
    pub tax_step: f64,
    pub outcome: ScenarioOutcome,
    pub solar_count: usize,
    /// Objective of the enumeration oracle, when requested.
    pub oracle_objective: Option<f64>,
}

impl SweepRow {
    pub fn oracle_agrees(&self) -> bool {
        self.oracle_objective.is_none_or(|o| close_relative(o, self.outcome.objective, COST_TOLERANCE))
    }
}

/// Solves `scenario` at each `(start, step)` tax schedule. Each level starts
/// from the previous level's plan, which stays feasible because taxes only
/// change the objective. With `oracle`, every level is also solved by that
/// configuration for comparison.
pub fn tax_sweep(
    inst: &PlanningInstance,
    tables: &ModelTables,
    scenario: ScenarioId,
    levels: &[(f64, f64)],
    config: &SolverConfig,
    oracle: Option<&SolverConfig>,
) -> Result<Vec<SweepRow>, CliError> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for &(start, step) in levels {
        let taxed = with_tax(inst, start, step);
        let mut model = build_free_model(&taxed, tables).map_err(|e| CliError::Invalid(e.to_string()))?;
        apply_scenario(&mut model, scenario.spec());
        let previous = rows.last().map(|r| &r.outcome.values);
        let raw = solve_model(&model, config, previous)?;
        let outcome = assess(&taxed, tables, scenario, raw, None)?;
        let oracle_objective = match oracle {
            Some(o) => solve_model(&model, o, None)?.objective,
            None => None,
        };
        let solar_count = outcome.solar_installations(&taxed);
        log::info!("tax ({start}, {step}): objective {} with {solar_count} solar stations", outcome.objective);
        rows.push(SweepRow { tax_start: start, tax_step: step, outcome, solar_count, oracle_objective });
    }
    for pair in rows.windows(2) {
        if pair[1].solar_count < pair[0].solar_count {
            log::warn!(
                "solar count falls from {} to {} between tax levels ({}, {}) and ({}, {})",
                pair[0].solar_count,
                pair[1].solar_count,
                pair[0].tax_start,
                pair[0].tax_step,
                pair[1].tax_start,
                pair[1].tax_step
            );
        }
    }
    Ok(rows)
}
