//! Assembles the planning MILP from an instance and its derived tables, and
//! applies scenario restrictions as variable bounds.

use thiserror::Error;

use crate::demand::{ModelTables, TableDims};
use crate::instance::{InstanceError, PlanningInstance};
use crate::model::{MilpModel, ModelLayout, RowFamily, Sense, VarId, VarKind};
use crate::names::VarName;
use crate::scenario::{BatteryRule, InstallRule, ScenarioSpec, StateRule};
use crate::units::WH_PER_KWH;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("table dimensions {found:?} do not match the instance {expected:?}")]
    Dimensions { expected: TableDims, found: TableDims },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Price in $/kWh of grid energy drawn at `site` in `(year, t)`, carbon tax
/// included.
pub fn energy_price(inst: &PlanningInstance, site: usize, year: usize, t: usize) -> f64 {
    inst.grid_tariff(site, year, t) + inst.carbon_tax(year) * inst.emission_factor(year) / 1000.0
}

/// Builds the model with every family free, then applies `scenario`.
pub fn build_model(
    inst: &PlanningInstance,
    tables: &ModelTables,
    scenario: ScenarioSpec,
) -> Result<MilpModel, BuildError> {
    let mut model = build_free_model(inst, tables)?;
    apply_scenario(&mut model, scenario);
    Ok(model)
}

struct Ids {
    n_types: usize,
    states: Vec<usize>,
    years: usize,
    periods: usize,
    n_cand: usize,
    n_sites: usize,
    n_tp: usize,
    z: Vec<VarId>,
    v: Vec<VarId>,
    x: Vec<VarId>,
    u: Vec<VarId>,
    h: Vec<VarId>,
    eb: Vec<VarId>,
    loss: Vec<VarId>,
    state_offset: Vec<usize>,
    n_states: usize,
}

impl Ids {
    /// `c` is a 0-based candidate position, `l >= 1`.
    fn z(&self, l: usize, c: usize, q: usize) -> VarId {
        self.z[((l - 1) * self.n_cand + c) * self.years + (q - 1)]
    }

    fn vx(&self, l: usize, s: usize, c: usize, q: usize, t: usize) -> usize {
        let ls = self.state_offset[l] + s;
        ((ls * self.n_cand + c) * self.years + (q - 1)) * self.periods + (t - 1)
    }

    fn v(&self, l: usize, s: usize, c: usize, q: usize, t: usize) -> VarId {
        self.v[self.vx(l, s, c, q, t)]
    }

    fn x(&self, l: usize, s: usize, c: usize, q: usize, t: usize) -> VarId {
        self.x[self.vx(l, s, c, q, t)]
    }

    fn cqt(&self, c: usize, q: usize, t: usize) -> usize {
        (c * self.years + (q - 1)) * self.periods + (t - 1)
    }

    fn h(&self, i: usize, j: usize, q: usize, t: usize) -> VarId {
        self.h[((i * self.n_sites + j) * self.years + (q - 1)) * self.periods + (t - 1)]
    }
}

/// Builds the model with all families free.
pub fn build_free_model(inst: &PlanningInstance, tables: &ModelTables) -> Result<MilpModel, BuildError> {
    let expected = TableDims::of(inst);
    for found in [tables.coverage.dims, tables.demand.dims, tables.solar.dims] {
        if found != expected {
            return Err(BuildError::Dimensions { expected, found });
        }
    }
    let n_exist = inst.n_existing();
    let sites = &inst.sites;
    let cands: Vec<usize> = (n_exist..sites.len()).collect();
    let years = inst.years;
    let periods = inst.periods();
    let n_types = inst.bs_types.len();
    let states: Vec<usize> = inst.bs_types.iter().map(|t| t.states.len()).collect();

    let layout = ModelLayout {
        states_per_type: states.clone(),
        solar_types: inst.bs_types.iter().map(|t| t.is_solar()).collect(),
        existing_sites: sites[..n_exist].iter().map(|s| s.id).collect(),
        candidate_sites: cands.iter().map(|&j| sites[j].id).collect(),
        test_points: inst.test_points.iter().map(|p| p.id).collect(),
        years,
        periods,
    };
    let mut m = MilpModel::new(inst.name.clone(), layout);

    let mut state_offset = vec![0; n_types];
    let mut n_states = 0;
    for l in 1..n_types {
        state_offset[l] = n_states;
        n_states += states[l];
    }
    let mut ids = Ids {
        n_types,
        states: states.clone(),
        years,
        periods,
        n_cand: cands.len(),
        n_sites: sites.len(),
        n_tp: inst.test_points.len(),
        z: Vec::new(),
        v: Vec::new(),
        x: Vec::new(),
        u: Vec::new(),
        h: Vec::new(),
        eb: Vec::new(),
        loss: Vec::new(),
        state_offset,
        n_states,
    };

    // Variables, family by family in a fixed order.
    for l in 1..n_types {
        for &j in &cands {
            for q in 1..=years {
                ids.z.push(m.add_var(VarName::Z { l, j: sites[j].id, q }, VarKind::Binary));
            }
        }
    }
    let per_state = |m: &mut MilpModel, make: fn(usize, usize, u32, usize, usize) -> VarName| {
        let mut out = Vec::new();
        for l in 1..n_types {
            for s in 0..states[l] {
                for &j in &cands {
                    for q in 1..=years {
                        for t in 1..=periods {
                            out.push(m.add_var(make(l, s, sites[j].id, q, t), VarKind::Binary));
                        }
                    }
                }
            }
        }
        out
    };
    ids.v = per_state(&mut m, |l, s, j, q, t| VarName::V { l, s, j, q, t });
    let per_site = |m: &mut MilpModel, kind: VarKind, make: fn(u32, usize, usize) -> VarName| {
        let mut out = Vec::new();
        for &j in &cands {
            for q in 1..=years {
                for t in 1..=periods {
                    out.push(m.add_var(make(sites[j].id, q, t), kind));
                }
            }
        }
        out
    };
    ids.u = per_site(&mut m, VarKind::Binary, |j, q, t| VarName::U { j, q, t });
    for (i, tp) in inst.test_points.iter().enumerate() {
        debug_assert_eq!(ids.h.len(), i * sites.len() * years * periods);
        for site in sites {
            for q in 1..=years {
                for t in 1..=periods {
                    ids.h.push(m.add_var(VarName::H { i: tp.id, j: site.id, q, t }, VarKind::Binary));
                }
            }
        }
    }
    ids.x = per_state(&mut m, |l, s, j, q, t| VarName::X { l, s, j, q, t });
    ids.eb = per_site(&mut m, VarKind::Continuous, |j, q, t| VarName::EB { j, q, t });
    ids.loss = per_site(&mut m, VarKind::Continuous, |j, q, t| VarName::L { j, q, t });
    debug_assert_eq!(ids.v.len(), ids.n_states * ids.n_cand * years * periods);

    add_objective(&mut m, inst, &ids, &cands)?;
    add_rows(&mut m, inst, tables, &ids, &cands);
    Ok(m)
}

fn add_objective(m: &mut MilpModel, inst: &PlanningInstance, ids: &Ids, cands: &[usize]) -> Result<(), BuildError> {
    let days = inst.economics.days_per_year();
    let mut terms = Vec::new();
    let mut constant = 0.0;
    for q in 1..=ids.years {
        let df = inst.discount_factor(q)?;
        for l in 1..ids.n_types {
            let cost = inst.installation_cost(l, q)?;
            for c in 0..ids.n_cand {
                terms.push((ids.z(l, c, q), df * cost));
            }
        }
        for t in 1..=ids.periods {
            let hours = inst.period_hours[t - 1];
            for j in 0..inst.n_existing() {
                let kwh = hours * inst.bs_types[0].states[0].total_w / WH_PER_KWH;
                constant += df * days * energy_price(inst, j, q, t) * kwh;
            }
            for (c, &j) in cands.iter().enumerate() {
                let price = df * days * energy_price(inst, j, q, t);
                for l in 1..ids.n_types {
                    for (s, state) in inst.bs_types[l].states.iter().enumerate() {
                        let coef = price * hours * state.total_w / WH_PER_KWH;
                        terms.push((ids.v(l, s, c, q, t), coef));
                        terms.push((ids.x(l, s, c, q, t), -coef));
                    }
                }
            }
        }
    }
    m.set_objective(terms, constant);
    Ok(())
}

fn add_rows(m: &mut MilpModel, inst: &PlanningInstance, tables: &ModelTables, ids: &Ids, cands: &[usize]) {
    let sites = &inst.sites;
    let (years, periods) = (ids.years, ids.periods);
    let id = |j: usize| u64::from(sites[j].id);
    let n_exist = inst.n_existing();
    let solar = &tables.solar;

    // Installation rules.
    for l in 1..ids.n_types {
        for (c, &j) in cands.iter().enumerate() {
            let terms = (1..=years).map(|q| (ids.z(l, c, q), 1.0)).collect();
            let allowed = if inst.allowed(l, j) { 1.0 } else { 0.0 };
            m.add_row(RowFamily::Allow, vec![l as u64, id(j)], terms, Sense::Le, allowed);
        }
    }
    for (c, &j) in cands.iter().enumerate() {
        let mut terms = Vec::new();
        for l in 1..ids.n_types {
            for q in 1..=years {
                terms.push((ids.z(l, c, q), 1.0));
            }
        }
        m.add_row(RowFamily::Once, vec![id(j)], terms, Sense::Le, 1.0);
    }
    // installed[l][c][q] = sum of z up to q
    let installed = |l: usize, c: usize, q: usize, coef: f64| -> Vec<(VarId, f64)> {
        (1..=q).map(|qq| (ids.z(l, c, qq), coef)).collect()
    };
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 1..=periods {
                let mut terms = vec![(ids.u[ids.cqt(c, q, t)], 1.0)];
                for l in 1..ids.n_types {
                    if inst.bs_types[l].is_solar() {
                        terms.extend(installed(l, c, q, -1.0));
                    }
                }
                m.add_row(RowFamily::SolarCap, vec![id(j), q as u64, t as u64], terms, Sense::Le, 0.0);
            }
        }
    }

    // Assignment and coverage.
    for (i, tp) in inst.test_points.iter().enumerate() {
        for q in 1..=years {
            let active = if q >= tp.activation_year { 1.0 } else { 0.0 };
            for t in 1..=periods {
                let terms = (0..ids.n_sites).map(|j| (ids.h(i, j, q, t), 1.0)).collect();
                m.add_row(RowFamily::Assign, vec![u64::from(tp.id), q as u64, t as u64], terms, Sense::Eq, active);
            }
        }
    }
    for (i, tp) in inst.test_points.iter().enumerate() {
        for (c, &j) in cands.iter().enumerate() {
            for q in 1..=years {
                for t in 1..=periods {
                    let mut terms = vec![(ids.h(i, j, q, t), 1.0)];
                    for l in 1..ids.n_types {
                        for s in 0..ids.states[l] {
                            if tables.coverage.get(i, j, l, s, q, t) {
                                terms.push((ids.v(l, s, c, q, t), -1.0));
                            }
                        }
                    }
                    m.add_row(
                        RowFamily::CoverCand,
                        vec![u64::from(tp.id), id(j), q as u64, t as u64],
                        terms,
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }
    for (i, tp) in inst.test_points.iter().enumerate() {
        for j in 0..ids.n_sites {
            for q in 1..=years {
                for t in 1..=periods {
                    let reach: usize = (0..ids.n_types)
                        .map(|l| (0..ids.states[l]).filter(|&s| tables.coverage.get(i, j, l, s, q, t)).count())
                        .sum();
                    m.add_row(
                        RowFamily::CoverAny,
                        vec![u64::from(tp.id), id(j), q as u64, t as u64],
                        vec![(ids.h(i, j, q, t), 1.0)],
                        Sense::Le,
                        reach as f64,
                    );
                }
            }
        }
    }

    // Served energy within the transmit budget.
    let legacy_tx = inst.bs_types[0].states[0].transmit_w;
    for j in 0..n_exist {
        for q in 1..=years {
            for t in 1..=periods {
                let terms = (0..ids.n_tp).map(|i| (ids.h(i, j, q, t), tables.demand.energy(i, j, q, t))).collect();
                let budget = inst.period_hours[t - 1] * legacy_tx / WH_PER_KWH;
                m.add_row(RowFamily::CapExist, vec![id(j), q as u64, t as u64], terms, Sense::Le, budget);
            }
        }
    }
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 1..=periods {
                let hours = inst.period_hours[t - 1];
                let mut terms: Vec<(VarId, f64)> =
                    (0..ids.n_tp).map(|i| (ids.h(i, j, q, t), tables.demand.energy(i, j, q, t))).collect();
                for l in 1..ids.n_types {
                    for (s, state) in inst.bs_types[l].states.iter().enumerate() {
                        terms.push((ids.v(l, s, c, q, t), -hours * state.transmit_w / WH_PER_KWH));
                    }
                }
                m.add_row(RowFamily::CapCand, vec![id(j), q as u64, t as u64], terms, Sense::Le, 0.0);
            }
        }
    }

    // One state per installed station.
    for l in 1..ids.n_types {
        for (c, &j) in cands.iter().enumerate() {
            for q in 1..=years {
                for t in 1..=periods {
                    let mut terms: Vec<(VarId, f64)> =
                        (0..ids.states[l]).map(|s| (ids.v(l, s, c, q, t), 1.0)).collect();
                    terms.extend(installed(l, c, q, -1.0));
                    m.add_row(RowFamily::SingleState, vec![l as u64, id(j), q as u64, t as u64], terms, Sense::Eq, 0.0);
                }
            }
        }
    }

    // Battery ledger. `flow(c, q, t)` holds the terms of E^S - E^P in period t.
    let flow = |c: usize, q: usize, t: usize| -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for l in 1..ids.n_types {
            if inst.bs_types[l].is_solar() {
                for qq in 1..=q {
                    terms.push((ids.z(l, c, qq), solar.yield_kwh(l, qq, q, t)));
                }
            }
            let hours = inst.period_hours[t - 1];
            for (s, state) in inst.bs_types[l].states.iter().enumerate() {
                terms.push((ids.x(l, s, c, q, t), -hours * state.total_w / WH_PER_KWH));
            }
        }
        terms
    };
    let neg = |terms: Vec<(VarId, f64)>| -> Vec<(VarId, f64)> { terms.into_iter().map(|(v, k)| (v, -k)).collect() };
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 2..=periods {
                let mut terms = vec![
                    (ids.eb[ids.cqt(c, q, t)], 1.0),
                    (ids.eb[ids.cqt(c, q, t - 1)], -1.0),
                    (ids.loss[ids.cqt(c, q, t - 1)], 1.0),
                ];
                terms.extend(neg(flow(c, q, t - 1)));
                m.add_row(RowFamily::BattDyn, vec![id(j), q as u64, t as u64], terms, Sense::Eq, 0.0);
            }
        }
    }
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            let mut terms = vec![
                (ids.eb[ids.cqt(c, q, 1)], 1.0),
                (ids.eb[ids.cqt(c, q, periods)], -1.0),
                (ids.loss[ids.cqt(c, q, periods)], 1.0),
            ];
            terms.extend(neg(flow(c, q, periods)));
            m.add_row(RowFamily::BattWrap, vec![id(j), q as u64], terms, Sense::Eq, 0.0);
        }
    }
    let window = |c: usize, q: usize, lower: bool, coef: f64| -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for l in 1..ids.n_types {
            if inst.bs_types[l].is_solar() {
                for qq in 1..=q {
                    let b = if lower { solar.lower(l, qq, q) } else { solar.upper(l, qq, q) };
                    terms.push((ids.z(l, c, qq), coef * b));
                }
            }
        }
        terms
    };
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 1..=periods {
                let mut terms = window(c, q, true, 1.0);
                terms.push((ids.eb[ids.cqt(c, q, t)], -1.0));
                m.add_row(RowFamily::BattLo, vec![id(j), q as u64, t as u64], terms, Sense::Le, 0.0);
            }
        }
    }
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 1..=periods {
                let mut terms = vec![(ids.eb[ids.cqt(c, q, t)], 1.0)];
                terms.extend(window(c, q, false, -1.0));
                m.add_row(RowFamily::BattHi, vec![id(j), q as u64, t as u64], terms, Sense::Le, 0.0);
            }
        }
    }
    for (c, &j) in cands.iter().enumerate() {
        for q in 1..=years {
            for t in 1..=periods {
                let mut terms = vec![(ids.loss[ids.cqt(c, q, t)], 1.0)];
                for l in 1..ids.n_types {
                    if inst.bs_types[l].is_solar() {
                        for qq in 1..=q {
                            terms.push((ids.z(l, c, qq), -solar.yield_kwh(l, qq, q, t)));
                        }
                    }
                }
                m.add_row(RowFamily::LossHi, vec![id(j), q as u64, t as u64], terms, Sense::Le, 0.0);
            }
        }
    }

    // x = v * u.
    let each_vx = |m: &mut MilpModel,
                   family: RowFamily,
                   row: &dyn Fn(VarId, VarId, VarId) -> (Vec<(VarId, f64)>, f64)| {
        for l in 1..ids.n_types {
            for s in 0..ids.states[l] {
                for (c, &j) in cands.iter().enumerate() {
                    for q in 1..=years {
                        for t in 1..=periods {
                            let (terms, rhs) = row(ids.v(l, s, c, q, t), ids.u[ids.cqt(c, q, t)], ids.x(l, s, c, q, t));
                            m.add_row(
                                family,
                                vec![l as u64, s as u64, id(j), q as u64, t as u64],
                                terms,
                                Sense::Le,
                                rhs,
                            );
                        }
                    }
                }
            }
        }
    };
    each_vx(m, RowFamily::LinV, &|v, _, x| (vec![(x, 1.0), (v, -1.0)], 0.0));
    each_vx(m, RowFamily::LinU, &|_, u, x| (vec![(x, 1.0), (u, -1.0)], 0.0));
    each_vx(m, RowFamily::LinVU, &|v, u, x| (vec![(v, 1.0), (u, 1.0), (x, -1.0)], 1.0));
}

/// Resets every bound to its default and applies the restrictions of
/// `scenario`. Applying the same scenario twice gives the same model.
pub fn apply_scenario(model: &mut MilpModel, scenario: ScenarioSpec) {
    let layout = model.layout.clone();
    if scenario.uses_solar() && !layout.has_solar_type() {
        let msg = format!("scenario {} relies on solar types but the instance has none", scenario.id);
        if !model.warnings.contains(&msg) {
            model.warnings.push(msg);
        }
    }
    for var in &mut model.variables {
        var.lower = 0.0;
        var.upper = match var.kind {
            VarKind::Binary => 1.0,
            VarKind::Continuous => f64::INFINITY,
        };
        let fixed_zero = match var.name {
            VarName::Z { l, q, .. } => match scenario.install {
                InstallRule::Free => false,
                InstallRule::FirstYearOnly => q > 1,
                InstallRule::SolarTypesOnly => !layout.solar_types[l],
            },
            VarName::V { l, s, .. } => {
                let max = layout.max_state(l);
                match scenario.states {
                    StateRule::MaxOnly => s != max,
                    StateRule::TwoState => s != 0 && s != max,
                    StateRule::Free => false,
                }
            }
            VarName::U { .. } | VarName::X { .. } => scenario.battery == BatteryRule::Off,
            VarName::H { .. } | VarName::EB { .. } | VarName::L { .. } => false,
        };
        if fixed_zero {
            var.upper = 0.0;
        }
    }
    model.scenario = Some(scenario.id);
}
