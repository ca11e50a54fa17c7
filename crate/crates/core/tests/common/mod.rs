//! Hand-built plans for integration tests.

#![allow(dead_code)]

use greenplan_core::instance::SiteKind;
use greenplan_core::solution::PlanShape;
use greenplan_core::{bundled, ModelTables, PlanSolution, PlanningInstance};

pub fn micro(name: &str) -> (PlanningInstance, ModelTables) {
    let inst = bundled::load(name).unwrap().unwrap();
    let tables = ModelTables::build(&inst).unwrap();
    (inst, tables)
}

/// Installs type `l` in year 1 on each `(site index, l)` pair, runs every
/// station at full power all day with grid supply only, parks solar banks at
/// their lower bound with all production spilled, and assigns test points
/// greedily to the first covering station with spare transmit budget.
/// Returns `None` when the greedy assignment fails.
pub fn full_power_plan(
    inst: &PlanningInstance,
    tables: &ModelTables,
    installs: &[(usize, usize)],
) -> Option<PlanSolution> {
    let mut sol = PlanSolution::empty(PlanShape::of(inst));
    for &(j, l) in installs {
        sol.set_z(l, j, 1, 1);
    }
    let periods = inst.periods();
    for q in 1..=inst.years {
        for &(j, l) in installs {
            let max = inst.bs_types[l].max_state();
            for t in 1..=periods {
                sol.set_v(l, max, j, q, t, 1);
                if inst.bs_types[l].is_solar() {
                    sol.set_eb(j, q, t, tables.solar.lower(l, 1, q));
                    sol.set_loss(j, q, t, tables.solar.yield_kwh(l, 1, q, t));
                }
            }
        }
        for t in 1..=periods {
            let hours = inst.period_hours[t - 1];
            let mut budget: Vec<Option<(usize, usize, f64)>> = inst
                .sites
                .iter()
                .enumerate()
                .map(|(j, site)| match site.kind {
                    SiteKind::Existing => Some((0, 0, hours * inst.bs_types[0].states[0].transmit_w / 1000.0)),
                    SiteKind::Candidate => installs.iter().find(|&&(jj, _)| jj == j).map(|&(_, l)| {
                        let s = inst.bs_types[l].max_state();
                        (l, s, hours * inst.bs_types[l].states[s].transmit_w / 1000.0)
                    }),
                })
                .collect();
            for i in 0..inst.test_points.len() {
                if !inst.activation_indicator(i, q).unwrap() {
                    continue;
                }
                let need = |j: usize| tables.demand.energy(i, j, q, t);
                let pick = (0..inst.sites.len()).find(|&j| {
                    budget[j].is_some_and(|(l, s, left)| tables.coverage.get(i, j, l, s, q, t) && need(j) <= left)
                })?;
                sol.set_h(i, pick, q, t, 1);
                if let Some((_, _, left)) = budget[pick].as_mut() {
                    *left -= need(pick);
                }
            }
        }
    }
    Some(sol)
}

/// Index of the site with `id`.
pub fn site(inst: &PlanningInstance, id: u32) -> usize {
    inst.site_index(id).unwrap()
}
