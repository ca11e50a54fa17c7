//! Independent check of a plan against the planning rules, the battery ledger
//! and the cost and energy accounting. Nothing here reuses the model
//! builder's coefficients: every quantity is recomputed from the instance and
//! its tables.

use std::fmt;

use thiserror::Error;

use crate::demand::{demand_energy_for_type, ModelTables, SolarSchedule};
use crate::instance::{InstanceError, PlanningInstance, SiteKind};
use crate::model::Sense;
use crate::scenario::{BatteryRule, InstallRule, ScenarioSpec, StateRule};
use crate::solution::{PlanShape, PlanSolution};
use crate::units::{KG_PER_TON, KWH_PER_MWH, WH_PER_KWH};

/// Absolute tolerance on energy rows (kWh).
pub const ENERGY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("plan shape {found:?} does not match the instance {expected:?}")]
    Shape { expected: PlanShape, found: PlanShape },
    #[error("plan is infeasible: {0}")]
    Infeasible(ViolationReport),
    #[error("battery ledger breaks at site {site}, year {year}, period {period}: {detail}")]
    Ledger { site: u32, year: usize, period: usize, detail: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Rule family, named like the model's row families.
    pub family: &'static str,
    pub index: Vec<u64>,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
    /// Positive when satisfied with room to spare, negative when violated.
    pub slack: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.index.iter().map(u64::to_string).collect();
        write!(
            f,
            "{}[{}]: {} {} {} (slack {})",
            self.family,
            idx.join(","),
            self.lhs,
            self.sense.symbol(),
            self.rhs,
            self.slack
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> Vec<&'static str> {
        let mut f: Vec<_> = self.violations.iter().map(|v| v.family).collect();
        f.dedup();
        f
    }

    fn check(&mut self, family: &'static str, index: Vec<u64>, lhs: f64, sense: Sense, rhs: f64, tol: f64) {
        let slack = match sense {
            Sense::Le => rhs - lhs,
            Sense::Ge => lhs - rhs,
            Sense::Eq => -(lhs - rhs).abs(),
        };
        if slack < -tol {
            self.violations.push(Violation { family, index, lhs, sense, rhs, slack });
        }
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        writeln!(f, "{} violations", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Per-period energy flows of one site derived from a plan, in kWh.
struct SiteFlows {
    solar: f64,
    battery_draw: f64,
    grid: f64,
}

/// Energy one station draws in `(year, t)`, split by source.
fn site_flows(
    inst: &PlanningInstance,
    solar: &SolarSchedule,
    sol: &PlanSolution,
    j: usize,
    q: usize,
    t: usize,
) -> SiteFlows {
    let hours = inst.period_hours[t - 1];
    if inst.sites[j].kind == SiteKind::Existing {
        let w = inst.bs_types[0].states[0].total_w;
        return SiteFlows { solar: 0.0, battery_draw: 0.0, grid: hours * w / WH_PER_KWH };
    }
    let mut produced = 0.0;
    let mut draw = 0.0;
    let mut grid = 0.0;
    for (l, ty) in inst.bs_types.iter().enumerate().skip(1) {
        if ty.is_solar() {
            for qq in 1..=q {
                produced += f64::from(sol.z(l, j, qq)) * solar.yield_kwh(l, qq, q, t);
            }
        }
        for (s, state) in ty.states.iter().enumerate() {
            let e = hours * state.total_w / WH_PER_KWH;
            let v = f64::from(sol.v(l, s, j, q, t));
            let x = f64::from(sol.x(l, s, j, q, t));
            draw += e * x;
            grid += e * (v - x);
        }
    }
    SiteFlows { solar: produced, battery_draw: draw, grid }
}

fn check_shape(inst: &PlanningInstance, sol: &PlanSolution) -> Result<(), ValidationError> {
    let expected = PlanShape::of(inst);
    if sol.shape != expected {
        return Err(ValidationError::Shape { expected, found: sol.shape.clone() });
    }
    Ok(())
}

/// Evaluates every planning rule on `sol`; `tol` applies to energy rows,
/// integer rows are checked exactly.
pub fn check_feasibility(
    inst: &PlanningInstance,
    tables: &ModelTables,
    sol: &PlanSolution,
    tol: f64,
) -> Result<ViolationReport, ValidationError> {
    check_shape(inst, sol)?;
    let mut rep = ViolationReport::default();
    let n_types = inst.bs_types.len();
    let n_sites = inst.sites.len();
    let (years, periods) = (inst.years, inst.periods());
    let id = |j: usize| u64::from(inst.sites[j].id);
    let is_cand = |j: usize| inst.sites[j].kind == SiteKind::Candidate;
    let b = |x: u8| f64::from(x);

    // Binary domains and decisions that cannot exist on existing sites or for
    // the legacy type.
    for j in 0..n_sites {
        for q in 1..=years {
            for l in 0..n_types {
                let illegal = l == 0 || !is_cand(j);
                if sol.z(l, j, q) > 1 || (illegal && sol.z(l, j, q) != 0) {
                    rep.check("binary", vec![l as u64, id(j), q as u64], b(sol.z(l, j, q)), Sense::Eq, 0.0, 0.0);
                }
            }
            for t in 1..=periods {
                if sol.u(j, q, t) > 1 || (!is_cand(j) && sol.u(j, q, t) != 0) {
                    rep.check("binary", vec![id(j), q as u64, t as u64], b(sol.u(j, q, t)), Sense::Eq, 0.0, 0.0);
                }
                for l in 0..n_types {
                    for s in 0..inst.bs_types[l].states.len() {
                        let illegal = l == 0 || !is_cand(j);
                        for val in [sol.v(l, s, j, q, t), sol.x(l, s, j, q, t)] {
                            if val > 1 || (illegal && val != 0) {
                                rep.check(
                                    "binary",
                                    vec![l as u64, s as u64, id(j), q as u64, t as u64],
                                    b(val),
                                    Sense::Eq,
                                    0.0,
                                    0.0,
                                );
                            }
                        }
                    }
                }
                for i in 0..inst.test_points.len() {
                    if sol.h(i, j, q, t) > 1 {
                        rep.check("binary", vec![id(j), q as u64, t as u64], b(sol.h(i, j, q, t)), Sense::Le, 1.0, 0.0);
                    }
                }
                if is_cand(j) {
                    rep.check("bounds", vec![id(j), q as u64, t as u64], sol.eb(j, q, t), Sense::Ge, 0.0, tol);
                    rep.check("bounds", vec![id(j), q as u64, t as u64], sol.loss(j, q, t), Sense::Ge, 0.0, tol);
                }
            }
        }
    }

    let cands: Vec<usize> = (0..n_sites).filter(|&j| is_cand(j)).collect();
    for l in 1..n_types {
        for &j in &cands {
            let n: f64 = (1..=years).map(|q| b(sol.z(l, j, q))).sum();
            let allowed = if inst.allowed(l, j) { 1.0 } else { 0.0 };
            rep.check("allow", vec![l as u64, id(j)], n, Sense::Le, allowed, 0.0);
        }
    }
    for &j in &cands {
        let n: f64 = (1..n_types).flat_map(|l| (1..=years).map(move |q| (l, q))).map(|(l, q)| b(sol.z(l, j, q))).sum();
        rep.check("once", vec![id(j)], n, Sense::Le, 1.0, 0.0);
    }
    for &j in &cands {
        for q in 1..=years {
            let solar_up: f64 =
                (1..n_types).filter(|&l| inst.bs_types[l].is_solar()).map(|l| b(sol.installed(l, j, q))).sum();
            for t in 1..=periods {
                rep.check("solar_cap", vec![id(j), q as u64, t as u64], b(sol.u(j, q, t)), Sense::Le, solar_up, 0.0);
            }
        }
    }

    for (i, tp) in inst.test_points.iter().enumerate() {
        for q in 1..=years {
            let nu = if inst.activation_indicator(i, q)? { 1.0 } else { 0.0 };
            for t in 1..=periods {
                let n: f64 = (0..n_sites).map(|j| b(sol.h(i, j, q, t))).sum();
                rep.check("assign", vec![u64::from(tp.id), q as u64, t as u64], n, Sense::Eq, nu, 0.0);
            }
        }
    }
    let cov = &tables.coverage;
    for (i, tp) in inst.test_points.iter().enumerate() {
        for j in 0..n_sites {
            for q in 1..=years {
                for t in 1..=periods {
                    let h = b(sol.h(i, j, q, t));
                    let idx = vec![u64::from(tp.id), id(j), q as u64, t as u64];
                    if is_cand(j) {
                        let mut reach = 0.0;
                        for l in 1..n_types {
                            for s in 0..inst.bs_types[l].states.len() {
                                if cov.get(i, j, l, s, q, t) {
                                    reach += b(sol.v(l, s, j, q, t));
                                }
                            }
                        }
                        rep.check("cover_cand", idx.clone(), h, Sense::Le, reach, 0.0);
                    }
                    let any: usize = (0..n_types)
                        .map(|l| (0..inst.bs_types[l].states.len()).filter(|&s| cov.get(i, j, l, s, q, t)).count())
                        .sum();
                    rep.check("cover_any", idx, h, Sense::Le, any as f64, 0.0);
                }
            }
        }
    }

    // Served energy against the transmit budget of the station actually
    // standing on the site.
    for j in 0..n_sites {
        for q in 1..=years {
            let serving_type = if is_cand(j) { sol.installed_type(j, q) } else { Some(0) };
            for t in 1..=periods {
                let hours = inst.period_hours[t - 1];
                let mut load = 0.0;
                for i in 0..inst.test_points.len() {
                    if sol.h(i, j, q, t) == 0 {
                        continue;
                    }
                    let l = serving_type.unwrap_or(0);
                    load += b(sol.h(i, j, q, t)) * demand_energy_for_type(inst, i, j, l, q, t)?;
                }
                let idx = vec![id(j), q as u64, t as u64];
                if is_cand(j) {
                    let mut budget = 0.0;
                    for l in 1..n_types {
                        for (s, st) in inst.bs_types[l].states.iter().enumerate() {
                            budget += b(sol.v(l, s, j, q, t)) * hours * st.transmit_w / WH_PER_KWH;
                        }
                    }
                    rep.check("cap_cand", idx, load, Sense::Le, budget, tol);
                } else {
                    let budget = hours * inst.bs_types[0].states[0].transmit_w / WH_PER_KWH;
                    rep.check("cap_exist", idx, load, Sense::Le, budget, tol);
                }
            }
        }
    }

    for l in 1..n_types {
        for &j in &cands {
            for q in 1..=years {
                let w = b(sol.installed(l, j, q));
                for t in 1..=periods {
                    let n: f64 = (0..inst.bs_types[l].states.len()).map(|s| b(sol.v(l, s, j, q, t))).sum();
                    rep.check("single_state", vec![l as u64, id(j), q as u64, t as u64], n, Sense::Eq, w, 0.0);
                }
            }
        }
    }

    // Battery ledger.
    for &j in &cands {
        for q in 1..=years {
            let flows: Vec<SiteFlows> = (1..=periods).map(|t| site_flows(inst, &tables.solar, sol, j, q, t)).collect();
            for t in 1..=periods {
                let prev = if t == 1 { periods } else { t - 1 };
                let f = &flows[prev - 1];
                let expected = sol.eb(j, q, prev) + f.solar - sol.loss(j, q, prev) - f.battery_draw;
                let (family, idx) = if t == 1 {
                    ("batt_wrap", vec![id(j), q as u64])
                } else {
                    ("batt_dyn", vec![id(j), q as u64, t as u64])
                };
                rep.check(family, idx, sol.eb(j, q, t), Sense::Eq, expected, tol);
            }
            let mut lo = 0.0;
            let mut hi = 0.0;
            for l in 1..n_types {
                if inst.bs_types[l].is_solar() {
                    for qq in 1..=q {
                        lo += b(sol.z(l, j, qq)) * tables.solar.lower(l, qq, q);
                        hi += b(sol.z(l, j, qq)) * tables.solar.upper(l, qq, q);
                    }
                }
            }
            for t in 1..=periods {
                let idx = vec![id(j), q as u64, t as u64];
                rep.check("batt_lo", idx.clone(), sol.eb(j, q, t), Sense::Ge, lo, tol);
                rep.check("batt_hi", idx.clone(), sol.eb(j, q, t), Sense::Le, hi, tol);
                rep.check("loss_hi", idx, sol.loss(j, q, t), Sense::Le, flows[t - 1].solar, tol);
            }
        }
    }

    for l in 1..n_types {
        for s in 0..inst.bs_types[l].states.len() {
            for &j in &cands {
                for q in 1..=years {
                    for t in 1..=periods {
                        let (v, u, x) = (b(sol.v(l, s, j, q, t)), b(sol.u(j, q, t)), b(sol.x(l, s, j, q, t)));
                        let idx = vec![l as u64, s as u64, id(j), q as u64, t as u64];
                        rep.check("lin_v", idx.clone(), x, Sense::Le, v, 0.0);
                        rep.check("lin_u", idx.clone(), x, Sense::Le, u, 0.0);
                        rep.check("lin_vu", idx, x, Sense::Ge, v + u - 1.0, 0.0);
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Checks that `sol` respects the variable restrictions of `scenario`.
pub fn check_scenario(inst: &PlanningInstance, sol: &PlanSolution, scenario: ScenarioSpec) -> ViolationReport {
    let mut rep = ViolationReport::default();
    let n_types = inst.bs_types.len();
    for j in inst.n_existing()..inst.sites.len() {
        let jid = u64::from(inst.sites[j].id);
        for q in 1..=inst.years {
            for l in 1..n_types {
                let banned = match scenario.install {
                    InstallRule::Free => false,
                    InstallRule::FirstYearOnly => q > 1,
                    InstallRule::SolarTypesOnly => !inst.bs_types[l].is_solar(),
                };
                if banned {
                    rep.check(
                        "scenario",
                        vec![l as u64, jid, q as u64],
                        f64::from(sol.z(l, j, q)),
                        Sense::Eq,
                        0.0,
                        0.0,
                    );
                }
            }
            for t in 1..=inst.periods() {
                if scenario.battery == BatteryRule::Off {
                    rep.check(
                        "scenario",
                        vec![jid, q as u64, t as u64],
                        f64::from(sol.u(j, q, t)),
                        Sense::Eq,
                        0.0,
                        0.0,
                    );
                }
                for l in 1..n_types {
                    let max = inst.bs_types[l].max_state();
                    for s in 0..=max {
                        let banned = match scenario.states {
                            StateRule::MaxOnly => s != max,
                            StateRule::TwoState => s != 0 && s != max,
                            StateRule::Free => false,
                        };
                        if banned {
                            rep.check(
                                "scenario",
                                vec![l as u64, s as u64, jid, q as u64, t as u64],
                                f64::from(sol.v(l, s, j, q, t)),
                                Sense::Eq,
                                0.0,
                                0.0,
                            );
                        }
                    }
                }
            }
        }
    }
    rep
}

/// Battery ledger of one candidate site over one representative day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayLedger {
    pub site: u32,
    pub year: usize,
    /// Level at the start of each period (kWh).
    pub level: Vec<f64>,
    pub solar: Vec<f64>,
    pub spill: Vec<f64>,
    pub battery_draw: Vec<f64>,
    /// `sum_t (solar - spill - draw)`; zero for a consistent cyclic day.
    pub balance: f64,
}

/// Replays the battery recursion of every candidate site and year and checks
/// that the plan's levels and spills follow it, including the wrap-around
/// from the last period to the first.
pub fn simulate_battery(
    inst: &PlanningInstance,
    solar: &SolarSchedule,
    sol: &PlanSolution,
    tol: f64,
) -> Result<Vec<DayLedger>, ValidationError> {
    check_shape(inst, sol)?;
    let periods = inst.periods();
    let mut out = Vec::new();
    for j in inst.n_existing()..inst.sites.len() {
        for q in 1..=inst.years {
            let site = inst.sites[j].id;
            let mut day = DayLedger {
                site,
                year: q,
                level: Vec::with_capacity(periods),
                solar: Vec::with_capacity(periods),
                spill: Vec::with_capacity(periods),
                battery_draw: Vec::with_capacity(periods),
                balance: 0.0,
            };
            for t in 1..=periods {
                let f = site_flows(inst, solar, sol, j, q, t);
                day.level.push(sol.eb(j, q, t));
                day.solar.push(f.solar);
                day.spill.push(sol.loss(j, q, t));
                day.battery_draw.push(f.battery_draw);
            }
            for t in 0..periods {
                let next = day.level[(t + 1) % periods];
                let replay = day.level[t] + day.solar[t] - day.spill[t] - day.battery_draw[t];
                if (replay - next).abs() > tol {
                    return Err(ValidationError::Ledger {
                        site,
                        year: q,
                        period: (t + 1) % periods + 1,
                        detail: format!("recursion gives {replay} kWh, plan holds {next} kWh"),
                    });
                }
                if day.spill[t] < -tol || day.spill[t] > day.solar[t] + tol {
                    return Err(ValidationError::Ledger {
                        site,
                        year: q,
                        period: t + 1,
                        detail: format!("spill {} outside [0, {}]", day.spill[t], day.solar[t]),
                    });
                }
            }
            day.balance = (0..periods).map(|t| day.solar[t] - day.spill[t] - day.battery_draw[t]).sum();
            out.push(day);
        }
    }
    Ok(out)
}

/// Discounted cost breakdown of a plan, in $ (unit costs in $/kWh).
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub total: f64,
    /// Change of `total` relative to a baseline plan, in percent.
    pub delta_pct: Option<f64>,
    pub capital: f64,
    /// Solar part of `capital`, battery replacements included.
    pub solar_capital: f64,
    pub operating: f64,
    pub grid: f64,
    pub carbon: f64,
    /// Solar capital per kWh produced by the panels.
    pub solar_per_kwh_produced: Option<f64>,
    /// Solar capital per kWh drawn from the batteries.
    pub solar_per_kwh_used: Option<f64>,
}

/// Energy totals over the horizon: energies in MWh, emissions in tons.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub network: f64,
    pub grid: f64,
    pub co2_tons: f64,
    pub solar_produced: f64,
    pub solar_used: f64,
}

impl EnergyReport {
    /// Share of solar production that was spilled.
    pub fn solar_loss_ratio(&self) -> Option<f64> {
        (self.solar_produced > 0.0).then(|| (self.solar_produced - self.solar_used) / self.solar_produced)
    }
}

fn require_feasible(inst: &PlanningInstance, tables: &ModelTables, sol: &PlanSolution) -> Result<(), ValidationError> {
    let rep = check_feasibility(inst, tables, sol, ENERGY_TOLERANCE)?;
    if rep.is_feasible() {
        Ok(())
    } else {
        Err(ValidationError::Infeasible(rep))
    }
}

/// Network totals for one simulated day of `q`: grid energy (kWh), tariff
/// cost and carbon tax of that energy ($), battery draw and solar production
/// (kWh).
fn daily_totals(
    inst: &PlanningInstance,
    tables: &ModelTables,
    sol: &PlanSolution,
    q: usize,
) -> (f64, f64, f64, f64, f64) {
    let mut grid = 0.0;
    let mut tariff_cost = 0.0;
    let mut tax_cost = 0.0;
    let mut draw = 0.0;
    let mut produced = 0.0;
    let tax_per_kwh = inst.carbon_tax(q) * inst.emission_factor(q) / 1000.0;
    for j in 0..inst.sites.len() {
        for t in 1..=inst.periods() {
            let f = site_flows(inst, &tables.solar, sol, j, q, t);
            grid += f.grid;
            tariff_cost += inst.grid_tariff(j, q, t) * f.grid;
            tax_cost += tax_per_kwh * f.grid;
            draw += f.battery_draw;
            produced += f.solar;
        }
    }
    (grid, tariff_cost, tax_cost, draw, produced)
}

/// Cost report of a feasible plan; `baseline` supplies the reference total
/// for the percentage change.
pub fn compute_costs(
    inst: &PlanningInstance,
    tables: &ModelTables,
    sol: &PlanSolution,
    baseline: Option<&CostReport>,
) -> Result<CostReport, ValidationError> {
    require_feasible(inst, tables, sol)?;
    let days = inst.economics.days_per_year();
    let (mut capital, mut solar_capital, mut grid, mut carbon) = (0.0, 0.0, 0.0, 0.0);
    let (mut produced, mut used) = (0.0, 0.0);
    for q in 1..=inst.years {
        let df = crate::economics::discount_factor(inst.economics.discount_rate, q);
        for j in inst.n_existing()..inst.sites.len() {
            for l in 1..inst.bs_types.len() {
                if sol.z(l, j, q) == 1 {
                    capital += df * inst.installation_cost(l, q)?;
                    solar_capital += df * inst.solar_capex(l, q);
                }
            }
        }
        let (_, tariff_cost, tax_cost, draw, prod) = daily_totals(inst, tables, sol, q);
        grid += df * days * tariff_cost;
        carbon += df * days * tax_cost;
        produced += days * prod;
        used += days * draw;
    }
    let operating = grid + carbon;
    let total = capital + operating;
    let per = |kwh: f64| (kwh > 0.0).then(|| solar_capital / kwh);
    Ok(CostReport {
        total,
        delta_pct: baseline.map(|b| (total - b.total) / b.total * 100.0),
        capital,
        solar_capital,
        operating,
        grid,
        carbon,
        solar_per_kwh_produced: per(produced),
        solar_per_kwh_used: per(used),
    })
}

/// Energy report of a feasible plan.
pub fn compute_energy(
    inst: &PlanningInstance,
    tables: &ModelTables,
    sol: &PlanSolution,
) -> Result<EnergyReport, ValidationError> {
    require_feasible(inst, tables, sol)?;
    let days = inst.economics.days_per_year();
    let (mut grid, mut used, mut produced, mut co2_kg) = (0.0, 0.0, 0.0, 0.0);
    for q in 1..=inst.years {
        let (g, _, _, draw, prod) = daily_totals(inst, tables, sol, q);
        grid += days * g;
        used += days * draw;
        produced += days * prod;
        co2_kg += days * g * inst.emission_factor(q);
    }
    let grid = grid / KWH_PER_MWH;
    let solar_used = used / KWH_PER_MWH;
    Ok(EnergyReport {
        network: grid + solar_used,
        grid,
        co2_tons: co2_kg / KG_PER_TON,
        solar_produced: produced / KWH_PER_MWH,
        solar_used,
    })
}
