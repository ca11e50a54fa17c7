mod common;

use common::{full_power_plan, micro, site};
use greenplan_core::economics::{discount_factor, inflation_factor};
use greenplan_core::validate::{
    check_feasibility, check_scenario, compute_costs, compute_energy, simulate_battery, ValidationError,
};
use greenplan_core::{ModelTables, PlanSolution, ScenarioId};

const TOL: f64 = 1e-6;

fn plain_plan() -> (greenplan_core::PlanningInstance, ModelTables, PlanSolution) {
    let (inst, tables) = micro("micro1");
    let installs = [(site(&inst, 2), 1), (site(&inst, 3), 1)];
    let sol = full_power_plan(&inst, &tables, &installs).expect("greedy plan");
    (inst, tables, sol)
}

#[test]
fn greedy_full_power_plan_is_feasible_in_the_baseline() {
    let (inst, tables, sol) = plain_plan();
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert!(rep.is_feasible(), "{rep}");
    assert!(check_scenario(&inst, &sol, ScenarioId::B.spec()).is_feasible());
    // first-year installs also satisfy the restricted scenario, but not the solar-only one
    assert!(check_scenario(&inst, &sol, ScenarioId::SZ0.spec()).is_feasible());
    assert!(!check_scenario(&inst, &sol, ScenarioId::FSZ.spec()).is_feasible());
}

#[test]
fn dropping_an_assignment_breaks_the_assignment_rule() {
    let (inst, tables, mut sol) = plain_plan();
    let j = sol.serving_site(0, 1, 2).unwrap();
    sol.set_h(0, j, 1, 2, 0);
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert_eq!(rep.families(), vec!["assign"]);
    assert_eq!(rep.violations[0].index, vec![1, 1, 2]);
}

#[test]
fn serving_from_an_uncovering_site_breaks_coverage() {
    let (inst, tables, mut sol) = plain_plan();
    // switch the station on site 3 to its idle state, which covers nothing
    let j = site(&inst, 3);
    let served: Vec<usize> = (0..inst.test_points.len()).filter(|&i| sol.h(i, j, 1, 2) == 1).collect();
    assert!(!served.is_empty(), "site 3 serves nobody in the plan");
    sol.set_v(1, 2, j, 1, 2, 0);
    sol.set_v(1, 0, j, 1, 2, 1);
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert!(rep.families().contains(&"cover_cand"), "{rep}");
}

#[test]
fn battery_mode_needs_solar_equipment() {
    let (inst, tables, mut sol) = plain_plan();
    let j = site(&inst, 2);
    sol.set_u(j, 2, 1, 1);
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert!(rep.families().contains(&"solar_cap"), "{rep}");
    assert!(rep.violations.iter().any(|v| v.family == "solar_cap" && v.index == vec![2, 2, 1]));
}

#[test]
fn installing_twice_breaks_the_once_rule() {
    let (inst, tables, mut sol) = plain_plan();
    let j = site(&inst, 2);
    sol.set_z(2, j, 2, 1);
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert!(rep.families().contains(&"once"), "{rep}");
}

#[test]
fn shape_mismatch_is_an_error() {
    let (_, _, sol) = plain_plan();
    let (other, tables) = micro("micro2");
    assert!(matches!(check_feasibility(&other, &tables, &sol, TOL), Err(ValidationError::Shape { .. })));
}

#[test]
fn idle_solar_bank_keeps_a_balanced_ledger() {
    let (inst, tables) = micro("micro1");
    let (a, b) = (site(&inst, 2), site(&inst, 3));
    let sol = full_power_plan(&inst, &tables, &[(a, 2), (b, 1)]).unwrap();
    let rep = check_feasibility(&inst, &tables, &sol, TOL).unwrap();
    assert!(rep.is_feasible(), "{rep}");
    let days = simulate_battery(&inst, &tables.solar, &sol, TOL).unwrap();
    assert_eq!(days.len(), 2 * inst.years);
    for day in &days {
        assert!(day.balance.abs() < TOL);
        assert!(day.battery_draw.iter().all(|&d| d == 0.0));
        if day.site == 2 {
            assert!(day.solar.iter().sum::<f64>() > 0.0);
            assert_eq!(day.spill, day.solar);
        } else {
            assert!(day.solar.iter().all(|&s| s == 0.0));
        }
    }
    let energy = compute_energy(&inst, &tables, &sol).unwrap();
    assert!(energy.solar_produced > 0.0);
    assert_eq!(energy.solar_used, 0.0);
    assert_eq!(energy.solar_loss_ratio(), Some(1.0));
}

#[test]
fn running_on_the_bank_by_night_balances_with_daytime_charge() {
    let (inst, tables) = micro("micro1");
    let j = site(&inst, 2);
    let mut sol = full_power_plan(&inst, &tables, &[(j, 2), (site(&inst, 3), 1)]).unwrap();
    // idle overnight on the battery in year 1: 56 W for 6 h = 0.336 kWh
    let night = 0.056 * 6.0;
    let q = 1;
    for t in [1, 4] {
        let s = (0..3).find(|&s| sol.v(2, s, j, q, t) == 1).unwrap();
        sol.set_v(2, s, j, q, t, 0);
        sol.set_v(2, 0, j, q, t, 1);
        sol.set_x(2, 0, j, q, t, 1);
        sol.set_u(j, q, t, 1);
        for i in 0..inst.test_points.len() {
            if sol.h(i, j, q, t) == 1 {
                sol.set_h(i, j, q, t, 0);
                sol.set_h(i, 0, q, t, 1);
            }
        }
    }
    let lo = tables.solar.lower(2, 1, q);
    let yields: Vec<f64> = (1..=4).map(|t| tables.solar.yield_kwh(2, 1, q, t)).collect();
    // draw a night load, keep one night load from each daytime yield, draw again
    let levels = [lo + night, lo, lo + night, lo + 2.0 * night];
    let spills = [0.0, yields[1] - night, yields[2] - night, 0.0];
    for t in 1..=4 {
        sol.set_eb(j, q, t, levels[t - 1]);
        sol.set_loss(j, q, t, spills[t - 1]);
    }
    let days = simulate_battery(&inst, &tables.solar, &sol, 1e-9).unwrap();
    let day = days.iter().find(|d| d.site == 2 && d.year == 1).unwrap();
    assert!(day.balance.abs() < 1e-9, "{}", day.balance);
    assert!((day.battery_draw.iter().sum::<f64>() - 2.0 * night).abs() < 1e-12);

    // one level off by a watt-hour breaks the recursion
    sol.set_eb(j, q, 3, levels[2] + 1e-3);
    assert!(matches!(
        simulate_battery(&inst, &tables.solar, &sol, 1e-9),
        Err(ValidationError::Ledger { site: 2, year: 1, .. })
    ));
}

#[test]
fn cost_report_matches_hand_computation() {
    let (inst, tables, sol) = plain_plan();
    let r: f64 = 0.12;
    let infl: f64 = 0.0264;
    let report = compute_costs(&inst, &tables, &sol, None).unwrap();
    // two plain micros in year 1 at 6000 $ each
    let capital = 2.0 * 6000.0 / (1.0 + r);
    assert!((report.capital - capital).abs() < 1e-9);
    assert_eq!(report.solar_capital, 0.0);
    // macro at 1350 W and two micros at 144 W around the clock, every year
    let daily_kwh = (1350.0 + 2.0 * 144.0) * 24.0 / 1000.0;
    let grid: f64 = (1..=3).map(|q| discount_factor(r, q) * 365.0 * 0.2 * inflation_factor(infl, q) * daily_kwh).sum();
    assert!((report.grid - grid).abs() < 1e-9 * grid, "{} vs {grid}", report.grid);
    assert_eq!(report.carbon, 0.0);
    assert!((report.total - capital - grid).abs() < 1e-9 * grid);
    assert_eq!(report.solar_per_kwh_produced, None);

    let energy = compute_energy(&inst, &tables, &sol).unwrap();
    let mwh = 3.0 * 365.0 * daily_kwh / 1000.0;
    assert!((energy.grid - mwh).abs() < 1e-9 * mwh);
    assert_eq!(energy.network, energy.grid);
    let co2: f64 = (1..=3).map(|q| 365.0 * daily_kwh * inst.emission_factor(q) / 1000.0).sum();
    assert!((energy.co2_tons - co2).abs() < 1e-9 * co2.max(1.0));

    let cheaper = compute_costs(&inst, &tables, &sol, Some(&report)).unwrap();
    assert_eq!(cheaper.delta_pct, Some(0.0));
}

#[test]
fn costs_of_an_infeasible_plan_are_refused() {
    let (inst, tables, mut sol) = plain_plan();
    sol.set_h(0, sol.serving_site(0, 1, 1).unwrap(), 1, 1, 0);
    assert!(matches!(compute_costs(&inst, &tables, &sol, None), Err(ValidationError::Infeasible(_))));
}

#[test]
fn named_values_round_trip_through_a_plan() {
    let (inst, _, sol) = plain_plan();
    let named = sol.to_named_values(&inst);
    let pairs: Vec<(String, f64)> = named.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let back = PlanSolution::from_named_values(&inst, pairs.iter().map(|(k, v)| (k.as_str(), *v))).unwrap();
    assert_eq!(back, sol);
    assert!(PlanSolution::from_named_values(&inst, [("z[1,2,1]", 0.5)]).is_err());
    assert!(PlanSolution::from_named_values(&inst, [("z[1,99,1]", 1.0)]).is_err());
    assert!(PlanSolution::from_named_values(&inst, [("u[1,1,1]", 1.0)]).is_err());
}
