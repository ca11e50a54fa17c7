//! Exhaustive exact solver for small planning models.
//!
//! Installation binaries `z` are enumerated depth-first with early rejection
//! of violated installation rows. For a fixed installation plan every year is
//! an independent subproblem, cached on the installation binaries it reads.
//! Within a year each site picks one local option per period (running state,
//! battery mode and their product); a site's daily option sequence is kept
//! only if its cyclic battery day is feasible, which is decided exactly by
//! [`greenplan_core::battery`]. Site sequences are combined by
//! branch-and-bound, and each period's combination of running states is
//! accepted only if the test points can be assigned, decided by a
//! depth-first search over test points that is cached on the states.
//!
//! The objective must depend only on `z`, `v`, `u` and `x`, so every
//! assignment of those determines the cost; the continuous battery
//! variables are a feasibility question only.

use std::collections::HashMap;
use std::time::Instant;

use greenplan_core::battery::{cyclic_witness, BatteryPeriod, BatteryTrajectory};
use greenplan_core::model::{Sense, VarId};
use greenplan_core::{MilpModel, VarFamily, VarName};

use crate::{RawSolution, SolveStatus, SolverError};

/// Default limit on free installation binaries.
pub const DEFAULT_MAX_BINARIES: usize = 24;

/// Largest number of daily option sequences examined for one site-year.
const MAX_SEQUENCES: usize = 2_000_000;

/// Feasibility tolerance of row checks, relative to `max(1, |rhs|)`.
const ROW_TOLERANCE: f64 = 1e-9;

/// Solves `model` exactly by enumeration. Fails when the model has more than
/// `max_binaries` free installation binaries or a row pattern the search
/// does not understand.
pub fn solve_enumerate(model: &MilpModel, max_binaries: usize) -> Result<RawSolution, SolverError> {
    let start = Instant::now();
    let plan = Structure::analyse(model)?;
    if plan.z_free.len() > max_binaries {
        return Err(SolverError::TooManyBinaries { found: plan.z_free.len(), limit: max_binaries });
    }
    let mut search = Search::new(model, &plan);
    search.run_installations(0);
    let Some((objective, values)) = search.best.take() else {
        return Ok(RawSolution::without_values(SolveStatus::Infeasible, start.elapsed()));
    };
    verify(model, &values)?;
    let values = model.variables.iter().zip(&values).map(|(v, &x)| (v.name.to_string(), x)).collect();
    Ok(RawSolution {
        status: SolveStatus::Optimal,
        objective: Some(objective),
        values,
        wall_time: start.elapsed(),
        bound: Some(objective),
        gap: Some(0.0),
    })
}

fn row_holds(sense: Sense, lhs: f64, rhs: f64) -> bool {
    sense.holds(lhs, rhs, ROW_TOLERANCE * rhs.abs().max(1.0))
}

/// Checks every row and bound of a complete assignment.
fn verify(model: &MilpModel, values: &[f64]) -> Result<(), SolverError> {
    for (v, &x) in model.variables.iter().zip(values) {
        if x < v.lower - ROW_TOLERANCE || x > v.upper + ROW_TOLERANCE {
            return Err(SolverError::Unsupported(format!("witness puts `{}` outside its bounds", v.name)));
        }
    }
    for c in &model.constraints {
        if !row_holds(c.sense, c.activity(values), c.rhs) {
            return Err(SolverError::Unsupported(format!("witness violates row `{}`", c.name())));
        }
    }
    Ok(())
}

/// One way to run a site in one period.
#[derive(Debug, Clone)]
struct LocalOption {
    u: Option<(VarId, f64)>,
    x: Option<(VarId, f64)>,
    cost: f64,
}

/// Options of one period sharing the same running state.
#[derive(Debug, Clone)]
struct StateChoice {
    v: Option<VarId>,
    options: Vec<LocalOption>,
}

/// Battery rows of one site-year, keyed by period.
#[derive(Debug, Clone, Default)]
struct BatteryRows {
    level: Vec<VarId>,
    spill: Vec<VarId>,
    /// Row carrying the level from period `t` to the next one.
    transition: Vec<Option<usize>>,
    lower: Vec<Vec<usize>>,
    upper: Vec<Vec<usize>>,
    spill_cap: Vec<Vec<usize>>,
}

/// Variables and rows local to one candidate site in one year.
#[derive(Debug, Clone)]
struct SiteYear {
    /// Per period: `v`, `u` and `x` variables with their `(l, s)`.
    v: Vec<Vec<(VarId, usize, usize)>>,
    u: Vec<Option<VarId>>,
    x: Vec<Vec<(VarId, usize, usize)>>,
    rows: Vec<Vec<usize>>,
    battery: Option<BatteryRows>,
}

/// Test point assignment rows of one period.
#[derive(Debug, Clone, Default)]
struct PeriodRows {
    rows: Vec<usize>,
    /// `h` variables of each test point and whether one must be chosen.
    points: Vec<(Vec<VarId>, bool)>,
    /// `v` variables read by the rows; their values key the cache.
    reads: Vec<VarId>,
}

#[derive(Debug, Clone)]
struct Year {
    sites: Vec<SiteYear>,
    periods: Vec<PeriodRows>,
    /// Installation binaries read by any row of the year.
    reads_z: Vec<VarId>,
}

/// The model split into installation rows and per-year slices.
struct Structure {
    z_free: Vec<VarId>,
    /// For each free `z` (by position), rows that become fully assigned once
    /// it is set.
    z_rows_closed_at: Vec<Vec<usize>>,
    years: Vec<Year>,
    /// Some installation row fails whatever the free binaries are.
    hopeless: bool,
}

/// Where a variable lives: family, site, year and period (0 when none).
fn place(name: &VarName) -> (VarFamily, u32, usize, usize) {
    (name.family(), name.site(), name.year(), name.period().unwrap_or(0))
}

fn unsupported(msg: impl Into<String>) -> SolverError {
    SolverError::Unsupported(msg.into())
}

impl Structure {
    fn analyse(model: &MilpModel) -> Result<Self, SolverError> {
        for &(v, c) in &model.objective {
            let family = model.variables[v].name.family();
            if c != 0.0 && !matches!(family, VarFamily::Z | VarFamily::V | VarFamily::U | VarFamily::X) {
                return Err(unsupported(format!("objective term on `{}`", model.variables[v].name)));
            }
        }
        let layout = &model.layout;
        let (years, periods) = (layout.years, layout.periods);
        let candidates = &layout.candidate_sites;
        let site_pos: HashMap<u32, usize> = candidates.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let empty_site = || SiteYear {
            v: vec![Vec::new(); periods],
            u: vec![None; periods],
            x: vec![Vec::new(); periods],
            rows: vec![Vec::new(); periods],
            battery: None,
        };
        let mut slices: Vec<Year> = (0..years)
            .map(|_| Year {
                sites: (0..candidates.len()).map(|_| empty_site()).collect(),
                periods: vec![PeriodRows::default(); periods],
                reads_z: Vec::new(),
            })
            .collect();
        let mut h_by_point: Vec<Vec<HashMap<u32, Vec<VarId>>>> = vec![vec![HashMap::new(); periods]; years];
        let mut z_free = Vec::new();

        let site_of = |j: u32, name: &VarName| {
            site_pos.get(&j).copied().ok_or_else(|| unsupported(format!("`{name}` is not on a candidate site")))
        };
        let check_time = |q: usize, t: usize, name: &VarName| {
            if q == 0 || q > years || t > periods {
                Err(unsupported(format!("`{name}` lies outside the model horizon")))
            } else {
                Ok(())
            }
        };
        for (id, var) in model.variables.iter().enumerate() {
            let name = &var.name;
            let (family, j, q, t) = place(name);
            check_time(q, t, name)?;
            match *name {
                VarName::Z { .. } => {
                    if var.lower < var.upper {
                        z_free.push(id);
                    }
                }
                VarName::V { l, s, .. } => {
                    let k = site_of(j, name)?;
                    slices[q - 1].sites[k].v[t - 1].push((id, l, s));
                }
                VarName::X { l, s, .. } => {
                    let k = site_of(j, name)?;
                    slices[q - 1].sites[k].x[t - 1].push((id, l, s));
                }
                VarName::U { .. } => {
                    let k = site_of(j, name)?;
                    slices[q - 1].sites[k].u[t - 1] = Some(id);
                }
                VarName::H { i, .. } => {
                    h_by_point[q - 1][t - 1].entry(i).or_default().push(id);
                }
                VarName::EB { .. } | VarName::L { .. } => {
                    let k = site_of(j, name)?;
                    let rows = slices[q - 1].sites[k].battery.get_or_insert_with(|| BatteryRows {
                        level: vec![usize::MAX; periods],
                        spill: vec![usize::MAX; periods],
                        transition: vec![None; periods],
                        lower: vec![Vec::new(); periods],
                        upper: vec![Vec::new(); periods],
                        spill_cap: vec![Vec::new(); periods],
                    });
                    if family == VarFamily::EB {
                        rows.level[t - 1] = id;
                    } else {
                        rows.spill[t - 1] = id;
                    }
                }
            }
        }

        let mut z_rows = Vec::new();
        let mut assign_rows: Vec<(usize, usize, u32, usize)> = Vec::new();
        for (r, row) in model.constraints.iter().enumerate() {
            let places: Vec<(VarFamily, u32, usize, usize)> =
                row.terms.iter().map(|&(v, _)| place(&model.variables[v].name)).collect();
            let has = |f: VarFamily| places.iter().any(|p| p.0 == f);
            let non_z: Vec<&(VarFamily, u32, usize, usize)> = places.iter().filter(|p| p.0 != VarFamily::Z).collect();
            let z_reads: Vec<VarId> = row
                .terms
                .iter()
                .filter(|&&(v, _)| model.variables[v].name.family() == VarFamily::Z)
                .map(|&(v, _)| v)
                .collect();
            if non_z.is_empty() {
                z_rows.push(r);
                continue;
            }
            let q = non_z[0].2;
            if non_z.iter().any(|p| p.2 != q) {
                return Err(unsupported(format!("row `{}` spans several years", row.name())));
            }
            let year = &mut slices[q - 1];
            year.reads_z.extend(&z_reads);
            if has(VarFamily::H) {
                let t = non_z[0].3;
                if non_z.iter().any(|p| !matches!(p.0, VarFamily::H | VarFamily::V) || p.3 != t) || !z_reads.is_empty()
                {
                    return Err(unsupported(format!("row `{}` mixes assignment with other decisions", row.name())));
                }
                let period = &mut year.periods[t - 1];
                period.rows.push(r);
                for &(v, _) in &row.terms {
                    if model.variables[v].name.family() == VarFamily::V {
                        period.reads.push(v);
                    }
                }
                let points: Vec<u32> = row
                    .terms
                    .iter()
                    .filter_map(|&(v, _)| match model.variables[v].name {
                        VarName::H { i, .. } => Some(i),
                        _ => None,
                    })
                    .collect();
                let only_h = non_z.iter().all(|p| p.0 == VarFamily::H);
                let unit = row.terms.iter().all(|&(_, c)| c == 1.0);
                if only_h && unit && row.sense == Sense::Eq && points.iter().all(|&i| i == points[0]) {
                    assign_rows.push((r, q, points[0], t));
                }
                continue;
            }
            let j = non_z[0].1;
            if non_z.iter().any(|p| p.1 != j) {
                return Err(unsupported(format!("row `{}` spans several sites", row.name())));
            }
            let k = site_pos[&j];
            if has(VarFamily::EB) || has(VarFamily::L) {
                classify_battery_row(model, r, &mut year.sites[k])?;
                continue;
            }
            let t = non_z[0].3;
            if non_z.iter().any(|p| p.3 != t) {
                return Err(unsupported(format!("row `{}` spans several periods", row.name())));
            }
            year.sites[k].rows[t - 1].push(r);
        }

        // test points and whether each must be served
        for (q, year) in slices.iter_mut().enumerate() {
            for (t, period) in year.periods.iter_mut().enumerate() {
                let mut ids: Vec<u32> = h_by_point[q][t].keys().copied().collect();
                ids.sort_unstable();
                for i in ids {
                    let vars = h_by_point[q][t][&i].clone();
                    let row = assign_rows
                        .iter()
                        .find(|&&(r, rq, ri, rt)| {
                            rq == q + 1 && rt == t + 1 && ri == i && model.constraints[r].terms.len() == vars.len()
                        })
                        .ok_or_else(|| unsupported(format!("test point {i} has no assignment row")))?;
                    let rhs = model.constraints[row.0].rhs;
                    if rhs != 0.0 && rhs != 1.0 {
                        return Err(unsupported(format!("assignment row of test point {i} has rhs {rhs}")));
                    }
                    period.points.push((vars, rhs == 1.0));
                }
                period.reads.sort_unstable();
                period.reads.dedup();
            }
            year.reads_z.sort_unstable();
            year.reads_z.dedup();
            for site in &year.sites {
                if let Some(b) = &site.battery {
                    if b.level.contains(&usize::MAX) || b.spill.contains(&usize::MAX) {
                        return Err(unsupported("battery variables missing for some period"));
                    }
                    if b.transition.iter().any(Option::is_none) {
                        return Err(unsupported("battery level recursion incomplete"));
                    }
                    for &l in &b.spill {
                        if model.variables[l].lower != 0.0 {
                            return Err(unsupported("spill variables must have lower bound 0"));
                        }
                    }
                }
            }
        }

        // installation rows close once their last free z is set
        let position: HashMap<VarId, usize> = z_free.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut z_rows_closed_at = vec![Vec::new(); z_free.len()];
        let mut always = Vec::new();
        for &r in &z_rows {
            let last = model.constraints[r].terms.iter().filter_map(|(v, _)| position.get(v)).max();
            match last {
                Some(&k) => z_rows_closed_at[k].push(r),
                None => always.push(r),
            }
        }
        let fixed: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let hopeless = always.iter().any(|&r| {
            let c = &model.constraints[r];
            !row_holds(c.sense, c.activity(&fixed), c.rhs)
        });
        Ok(Self { z_free, z_rows_closed_at, years: slices, hopeless })
    }
}

/// Files a row with battery variables under the role its continuous terms
/// reveal: level recursion, lower or upper level bound, or spill cap.
fn classify_battery_row(model: &MilpModel, r: usize, site: &mut SiteYear) -> Result<(), SolverError> {
    let row = &model.constraints[r];
    let battery = site.battery.as_mut().ok_or_else(|| unsupported(format!("row `{}` without battery", row.name())))?;
    let periods = battery.level.len();
    let continuous: Vec<(VarFamily, usize, f64)> = row
        .terms
        .iter()
        .filter_map(|&(v, c)| {
            let name = &model.variables[v].name;
            match name.family() {
                f @ (VarFamily::EB | VarFamily::L) => Some((f, name.period().unwrap_or(0), c)),
                _ => None,
            }
        })
        .collect();
    let bad = || unsupported(format!("battery row `{}` has an unexpected shape", row.name()));
    match continuous.as_slice() {
        [(VarFamily::EB, t, c)] if row.sense == Sense::Le && *c == -1.0 => battery.lower[t - 1].push(r),
        [(VarFamily::EB, t, c)] if row.sense == Sense::Le && *c == 1.0 => battery.upper[t - 1].push(r),
        [(VarFamily::L, t, c)] if row.sense == Sense::Le && *c == 1.0 => battery.spill_cap[t - 1].push(r),
        // a one-period day: the level terms of the recursion cancel
        [(VarFamily::L, 1, c)] if row.sense == Sense::Eq && *c == 1.0 && periods == 1 => {
            if battery.transition[0].replace(r).is_some() {
                return Err(bad());
            }
        }
        terms if terms.len() == 3 && row.sense == Sense::Eq => {
            let find = |f: VarFamily, c: f64| terms.iter().find(|p| p.0 == f && p.2 == c).map(|p| p.1);
            let (next, prev, spill) = (
                find(VarFamily::EB, 1.0).ok_or_else(bad)?,
                find(VarFamily::EB, -1.0).ok_or_else(bad)?,
                find(VarFamily::L, 1.0).ok_or_else(bad)?,
            );
            if spill != prev || next != prev % periods + 1 {
                return Err(bad());
            }
            if battery.transition[prev - 1].replace(r).is_some() {
                return Err(bad());
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}

/// Result of one year subproblem for a fixed installation plan.
#[derive(Debug, Clone)]
struct YearPlan {
    cost: f64,
    /// Per site: chosen state choice and option index per period, and the
    /// battery trajectory when the site has one.
    sites: Vec<(Vec<(usize, usize)>, Option<BatteryTrajectory<f64>>)>,
    /// Per period: `h` variables set to one.
    served: Vec<Vec<VarId>>,
    /// Per site, per period: the state choices evaluated for the site.
    choices: Vec<Vec<Vec<StateChoice>>>,
}

/// A site's daily sequence with its best battery-feasible completion.
#[derive(Debug, Clone)]
struct SiteSequence {
    picks: Vec<(usize, usize)>,
    cost: f64,
    battery: Option<BatteryTrajectory<f64>>,
}

struct Search<'a> {
    model: &'a MilpModel,
    plan: &'a Structure,
    values: Vec<f64>,
    year_cache: HashMap<(usize, Vec<u8>), Option<YearPlan>>,
    period_cache: HashMap<(usize, usize, Vec<u8>), Option<Vec<VarId>>>,
    best: Option<(f64, Vec<f64>)>,
}

fn bit(x: f64) -> u8 {
    u8::from(x > 0.5)
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, plan: &'a Structure) -> Self {
        Self {
            model,
            plan,
            values: model.variables.iter().map(|v| v.lower).collect(),
            year_cache: HashMap::new(),
            period_cache: HashMap::new(),
            best: None,
        }
    }

    fn row_ok(&self, r: usize) -> bool {
        let c = &self.model.constraints[r];
        row_holds(c.sense, c.activity(&self.values), c.rhs)
    }

    /// Depth-first over free installation binaries, zero before one.
    fn run_installations(&mut self, depth: usize) {
        if self.plan.hopeless {
            return;
        }
        if depth == self.plan.z_free.len() {
            self.evaluate_installations();
            return;
        }
        let var = self.plan.z_free[depth];
        let v = &self.model.variables[var];
        let (lo, hi) = (v.lower.round() as i64, v.upper.round() as i64);
        for value in lo..=hi {
            self.values[var] = value as f64;
            if self.plan.z_rows_closed_at[depth].iter().all(|&r| self.row_ok(r)) {
                self.run_installations(depth + 1);
            }
        }
        self.values[var] = v.lower;
    }

    fn evaluate_installations(&mut self) {
        let model = self.model;
        let mut total = model.objective_constant;
        for &(v, c) in &model.objective {
            if model.variables[v].name.family() == VarFamily::Z {
                total += c * self.values[v];
            }
        }
        let mut plans = Vec::with_capacity(self.plan.years.len());
        for q in 0..self.plan.years.len() {
            let key: Vec<u8> = self.plan.years[q].reads_z.iter().map(|&v| bit(self.values[v])).collect();
            let cache_key = (q, key);
            if !self.year_cache.contains_key(&cache_key) {
                let result = self.solve_year(q);
                self.year_cache.insert(cache_key.clone(), result);
            }
            match &self.year_cache[&cache_key] {
                Some(p) => {
                    total += p.cost;
                    plans.push(cache_key);
                }
                None => return,
            }
        }
        if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
            let mut values = self.values.clone();
            for (q, key) in plans.iter().enumerate() {
                let plan = self.year_cache[key].as_ref().expect("feasible year");
                self.write_year(&mut values, q, plan);
            }
            self.best = Some((total, values));
        }
    }

    /// Copies a year plan into a full assignment.
    fn write_year(&self, values: &mut [f64], q: usize, plan: &YearPlan) {
        let year = &self.plan.years[q];
        for (k, site) in year.sites.iter().enumerate() {
            let (picks, battery) = &plan.sites[k];
            for (t, &(c, o)) in picks.iter().enumerate() {
                let choice = &plan.choices[k][t][c];
                apply_option(values, site, t, choice, &choice.options[o]);
            }
            if let (Some(rows), Some(traj)) = (&site.battery, battery) {
                for t in 0..rows.level.len() {
                    values[rows.level[t]] = traj.level[t];
                    values[rows.spill[t]] = traj.spill[t];
                }
            }
        }
        for (t, served) in plan.served.iter().enumerate() {
            for (vars, _) in &year.periods[t].points {
                for &h in vars {
                    values[h] = self.model.variables[h].lower;
                }
            }
            for &h in served {
                values[h] = 1.0;
            }
        }
    }

    fn solve_year(&mut self, q: usize) -> Option<YearPlan> {
        let plan = self.plan;
        let year = &plan.years[q];
        let mut choices = Vec::with_capacity(year.sites.len());
        let mut sequences: Vec<Vec<SiteSequence>> = Vec::with_capacity(year.sites.len());
        for site in &year.sites {
            let per_period: Vec<Vec<StateChoice>> = (0..site.v.len()).map(|t| self.local_choices(site, t)).collect();
            let seqs = self.site_sequences(site, &per_period);
            if seqs.is_empty() {
                return None;
            }
            choices.push(per_period);
            sequences.push(seqs);
        }
        let n = sequences.len();
        // cheapest remaining cost from each site on, for bounding
        let mut floor = vec![0.0; n + 1];
        for k in (0..n).rev() {
            floor[k] = floor[k + 1] + sequences[k][0].cost;
        }
        let mut best: Option<(f64, Vec<usize>, Vec<Vec<VarId>>)> = None;
        let mut stack = vec![0usize; n];
        self.combine(q, &choices, &sequences, &floor, 0, 0.0, &mut stack, &mut best);
        let (cost, picked, served) = best?;
        let sites = picked
            .iter()
            .enumerate()
            .map(|(k, &p)| (sequences[k][p].picks.clone(), sequences[k][p].battery.clone()))
            .collect();
        Some(YearPlan { cost, sites, served, choices })
    }

    #[allow(clippy::too_many_arguments)]
    fn combine(
        &mut self,
        q: usize,
        choices: &[Vec<Vec<StateChoice>>],
        sequences: &[Vec<SiteSequence>],
        floor: &[f64],
        k: usize,
        cost: f64,
        stack: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>, Vec<Vec<VarId>>)>,
    ) {
        if let Some((b, _, _)) = best {
            if cost + floor[k] >= *b {
                return;
            }
        }
        if k == sequences.len() {
            if let Some(served) = self.assign_all_periods(q, choices, sequences, stack) {
                *best = Some((cost, stack.clone(), served));
            }
            return;
        }
        for p in 0..sequences[k].len() {
            let c = cost + sequences[k][p].cost;
            if let Some((b, _, _)) = best {
                // sequences are sorted by cost, so no later one can do better
                if c + floor[k + 1] >= *b {
                    break;
                }
            }
            stack[k] = p;
            self.combine(q, choices, sequences, floor, k + 1, c, stack, best);
        }
    }

    /// Test point assignment for every period under the chosen sequences.
    fn assign_all_periods(
        &mut self,
        q: usize,
        choices: &[Vec<Vec<StateChoice>>],
        sequences: &[Vec<SiteSequence>],
        stack: &[usize],
    ) -> Option<Vec<Vec<VarId>>> {
        let year = &self.plan.years[q];
        let mut served = Vec::with_capacity(year.periods.len());
        for t in 0..year.periods.len() {
            for (k, site) in year.sites.iter().enumerate() {
                for &(v, _, _) in &site.v[t] {
                    self.values[v] = self.model.variables[v].lower;
                }
                let (c, _) = sequences[k][stack[k]].picks[t];
                if let Some(v) = choices[k][t][c].v {
                    self.values[v] = 1.0;
                }
            }
            let key: Vec<u8> = year.periods[t].reads.iter().map(|&v| bit(self.values[v])).collect();
            let cache_key = (q, t, key);
            if !self.period_cache.contains_key(&cache_key) {
                let result = self.assign_points(&year.periods[t]);
                self.period_cache.insert(cache_key.clone(), result);
            }
            served.push(self.period_cache[&cache_key].clone()?);
        }
        Some(served)
    }

    /// Depth-first search for a test point assignment satisfying every
    /// assignment row, given the running states in `values`.
    fn assign_points(&self, period: &PeriodRows) -> Option<Vec<VarId>> {
        let model = self.model;
        let n_rows = period.rows.len();
        let mut act = vec![0.0; n_rows];
        let mut rest_min = vec![0.0; n_rows];
        let mut rest_max = vec![0.0; n_rows];
        let mut var_rows: HashMap<VarId, Vec<(usize, f64)>> = HashMap::new();
        for (k, &r) in period.rows.iter().enumerate() {
            for &(v, c) in &model.constraints[r].terms {
                if model.variables[v].name.family() == VarFamily::H {
                    var_rows.entry(v).or_default().push((k, c));
                } else {
                    act[k] += c * self.values[v];
                }
            }
        }
        // per point: rows touched and their best and worst contribution
        let mut order: Vec<usize> = (0..period.points.len()).collect();
        let options: Vec<Vec<VarId>> = period
            .points
            .iter()
            .map(|(vars, _)| vars.iter().copied().filter(|&h| model.variables[h].upper >= 0.5).collect())
            .collect();
        order.sort_by_key(|&p| (options[p].len(), p));
        let mut touched: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); period.points.len()];
        for (p, (vars, _)) in period.points.iter().enumerate() {
            let mut contrib: HashMap<usize, (f64, f64)> = HashMap::new();
            for h in vars {
                for &(k, c) in var_rows.get(h).map(Vec::as_slice).unwrap_or(&[]) {
                    let e = contrib.entry(k).or_insert((0.0, 0.0));
                    e.0 = e.0.min(c);
                    e.1 = e.1.max(c);
                }
            }
            let mut list: Vec<(usize, f64, f64)> = contrib.into_iter().map(|(k, (lo, hi))| (k, lo, hi)).collect();
            list.sort_by_key(|e| e.0);
            for &(k, lo, hi) in &list {
                rest_min[k] += lo;
                rest_max[k] += hi;
            }
            touched[p] = list;
        }
        let ok = |k: usize, act: &[f64], rest_min: &[f64], rest_max: &[f64]| {
            let c = &model.constraints[period.rows[k]];
            let tol = ROW_TOLERANCE * c.rhs.abs().max(1.0);
            let low = act[k] + rest_min[k];
            let high = act[k] + rest_max[k];
            match c.sense {
                Sense::Le => low <= c.rhs + tol,
                Sense::Ge => high >= c.rhs - tol,
                Sense::Eq => low <= c.rhs + tol && high >= c.rhs - tol,
            }
        };
        if !(0..n_rows).all(|k| ok(k, &act, &rest_min, &rest_max)) {
            return None;
        }
        let mut chosen = Vec::new();
        let found = dfs_points(
            0,
            &order,
            period,
            &options,
            &touched,
            &var_rows,
            &mut act,
            &mut rest_min,
            &mut rest_max,
            &ok,
            &mut chosen,
        );
        found.then_some(chosen)
    }

    /// State choices of one site in one period, each with its valid local
    /// options sorted by cost.
    fn local_choices(&mut self, site: &SiteYear, t: usize) -> Vec<StateChoice> {
        let model = self.model;
        let vars = &site.v[t];
        let mut states: Vec<Option<(VarId, usize, usize)>> = Vec::new();
        let forced: Vec<&(VarId, usize, usize)> =
            vars.iter().filter(|(v, _, _)| model.variables[*v].lower >= 0.5).collect();
        match forced.as_slice() {
            [] => {
                states.push(None);
                states.extend(vars.iter().filter(|(v, _, _)| model.variables[*v].upper >= 0.5).map(|&e| Some(e)));
            }
            [one] => states.push(Some(**one)),
            _ => return Vec::new(),
        }
        let u_values: Vec<f64> = match site.u[t] {
            Some(u) => {
                let var = &model.variables[u];
                (var.lower.round() as i64..=var.upper.round() as i64).map(|x| x as f64).collect()
            }
            None => vec![0.0],
        };
        let cost_of =
            |v: VarId| model.objective.binary_search_by_key(&v, |&(id, _)| id).map_or(0.0, |k| model.objective[k].1);
        let mut out = Vec::new();
        for state in states {
            let pair =
                state.and_then(|(_, l, s)| site.x[t].iter().find(|&&(_, xl, xs)| xl == l && xs == s).map(|e| e.0));
            if site.x[t].iter().any(|&(x, _, _)| model.variables[x].lower >= 0.5 && Some(x) != pair) {
                continue;
            }
            let x_values: Vec<f64> = match pair {
                Some(x) => {
                    let var = &model.variables[x];
                    (var.lower.round() as i64..=var.upper.round() as i64).map(|v| v as f64).collect()
                }
                None => vec![0.0],
            };
            let mut options = Vec::new();
            for &u in &u_values {
                for &x in &x_values {
                    let option = LocalOption {
                        u: site.u[t].map(|id| (id, u)),
                        x: pair.map(|id| (id, x)),
                        cost: state.map_or(0.0, |(v, _, _)| cost_of(v))
                            + site.u[t].map_or(0.0, |id| cost_of(id) * u)
                            + pair.map_or(0.0, |id| cost_of(id) * x),
                    };
                    let choice = StateChoice { v: state.map(|e| e.0), options: Vec::new() };
                    let mut values = std::mem::take(&mut self.values);
                    apply_option(&mut values, site, t, &choice, &option);
                    self.values = values;
                    if site.rows[t].iter().all(|&r| self.row_ok(r)) {
                        options.push(option);
                    }
                }
            }
            if !options.is_empty() {
                options.sort_by(|a, b| a.cost.total_cmp(&b.cost));
                out.push(StateChoice { v: state.map(|e| e.0), options });
            }
        }
        out
    }

    /// Every daily state sequence of a site with its cheapest completion
    /// whose battery day is feasible, sorted by cost.
    fn site_sequences(&mut self, site: &SiteYear, per_period: &[Vec<StateChoice>]) -> Vec<SiteSequence> {
        let periods = per_period.len();
        if per_period.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let count: usize =
            per_period.iter().map(Vec::len).try_fold(1usize, |a, n| a.checked_mul(n)).unwrap_or(usize::MAX);
        if count > MAX_SEQUENCES {
            log::warn!("site-year with {count} state sequences exceeds the enumeration budget");
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut state = vec![0usize; periods];
        loop {
            if let Some(seq) = self.best_completion(site, per_period, &state) {
                out.push(seq);
            }
            // odometer increment
            let mut t = 0;
            loop {
                if t == periods {
                    out.sort_by(|a: &SiteSequence, b| a.cost.total_cmp(&b.cost));
                    return out;
                }
                state[t] += 1;
                if state[t] < per_period[t].len() {
                    break;
                }
                state[t] = 0;
                t += 1;
            }
        }
    }

    /// Cheapest choice of local options for a fixed state sequence whose
    /// battery day is feasible.
    fn best_completion(
        &mut self,
        site: &SiteYear,
        per_period: &[Vec<StateChoice>],
        states: &[usize],
    ) -> Option<SiteSequence> {
        let periods = states.len();
        let lists: Vec<&StateChoice> = (0..periods).map(|t| &per_period[t][states[t]]).collect();
        let Some(battery) = &site.battery else {
            let picks = (0..periods).map(|t| (states[t], 0)).collect();
            let cost = lists.iter().map(|c| c.options[0].cost).sum();
            return Some(SiteSequence { picks, cost, battery: None });
        };
        // all completions, cheapest first
        let mut completions: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
        for choice in &lists {
            let mut next = Vec::with_capacity(completions.len() * choice.options.len());
            for (cost, picks) in &completions {
                for (o, opt) in choice.options.iter().enumerate() {
                    let mut p = picks.clone();
                    p.push(o);
                    next.push((cost + opt.cost, p));
                }
            }
            completions = next;
        }
        completions.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for (cost, picks) in completions {
            let mut values = std::mem::take(&mut self.values);
            for t in 0..periods {
                apply_option(&mut values, site, t, lists[t], &lists[t].options[picks[t]]);
            }
            self.values = values;
            if let Some(traj) = self.battery_day(battery) {
                let picks = (0..periods).map(|t| (states[t], picks[t])).collect();
                return Some(SiteSequence { picks, cost, battery: Some(traj) });
            }
        }
        None
    }

    /// Binary part of a battery row under the current values.
    fn binary_part(&self, r: usize) -> f64 {
        self.model.constraints[r]
            .terms
            .iter()
            .filter(|&&(v, _)| !matches!(self.model.variables[v].name.family(), VarFamily::EB | VarFamily::L))
            .map(|&(v, c)| c * self.values[v])
            .sum()
    }

    fn battery_day(&self, rows: &BatteryRows) -> Option<BatteryTrajectory<f64>> {
        let model = self.model;
        let periods = rows.level.len();
        let mut days = Vec::with_capacity(periods);
        for t in 0..periods {
            let level = &model.variables[rows.level[t]];
            let spill = &model.variables[rows.spill[t]];
            let mut lo = level.lower;
            let mut hi = level.upper;
            let mut spill_max = spill.upper;
            for &r in &rows.lower[t] {
                lo = lo.max(self.binary_part(r) - model.constraints[r].rhs);
            }
            for &r in &rows.upper[t] {
                hi = hi.min(model.constraints[r].rhs - self.binary_part(r));
            }
            for &r in &rows.spill_cap[t] {
                spill_max = spill_max.min(model.constraints[r].rhs - self.binary_part(r));
            }
            let r = rows.transition[t].expect("checked in analysis");
            let inflow = model.constraints[r].rhs - self.binary_part(r);
            days.push(BatteryPeriod { lo, hi, inflow, spill_max });
        }
        cyclic_witness(&days, ROW_TOLERANCE)
    }
}

/// Sets the `v`, `u` and `x` values of one site-period.
fn apply_option(values: &mut [f64], site: &SiteYear, t: usize, choice: &StateChoice, option: &LocalOption) {
    for &(v, _, _) in &site.v[t] {
        values[v] = 0.0;
    }
    for &(x, _, _) in &site.x[t] {
        values[x] = 0.0;
    }
    if let Some(v) = choice.v {
        values[v] = 1.0;
    }
    if let Some(u) = site.u[t] {
        values[u] = 0.0;
    }
    if let Some((u, value)) = option.u {
        values[u] = value;
    }
    if let Some((x, value)) = option.x {
        values[x] = value;
    }
}

#[allow(clippy::too_many_arguments)]
fn dfs_points(
    depth: usize,
    order: &[usize],
    period: &PeriodRows,
    options: &[Vec<VarId>],
    touched: &[Vec<(usize, f64, f64)>],
    var_rows: &HashMap<VarId, Vec<(usize, f64)>>,
    act: &mut [f64],
    rest_min: &mut [f64],
    rest_max: &mut [f64],
    ok: &dyn Fn(usize, &[f64], &[f64], &[f64]) -> bool,
    chosen: &mut Vec<VarId>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let p = order[depth];
    let must = period.points[p].1;
    for &(k, lo, hi) in &touched[p] {
        rest_min[k] -= lo;
        rest_max[k] -= hi;
    }
    let picks: Vec<Option<VarId>> = if must { options[p].iter().map(|&h| Some(h)).collect() } else { vec![None] };
    for pick in picks {
        if let Some(h) = pick {
            for &(k, c) in var_rows.get(&h).map(Vec::as_slice).unwrap_or(&[]) {
                act[k] += c;
            }
        }
        let feasible = touched[p].iter().all(|&(k, _, _)| ok(k, act, rest_min, rest_max));
        if feasible {
            if let Some(h) = pick {
                chosen.push(h);
            }
            if dfs_points(depth + 1, order, period, options, touched, var_rows, act, rest_min, rest_max, ok, chosen) {
                return true;
            }
            if pick.is_some() {
                chosen.pop();
            }
        }
        if let Some(h) = pick {
            for &(k, c) in var_rows.get(&h).map(Vec::as_slice).unwrap_or(&[]) {
                act[k] -= c;
            }
        }
    }
    for &(k, lo, hi) in &touched[p] {
        rest_min[k] += lo;
        rest_max[k] += hi;
    }
    false
}
