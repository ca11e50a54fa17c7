use greenplan_core::economics::{discount_factor, inflation_factor};
use greenplan_core::instance::SiteKind;
use greenplan_core::{
    apply_scenario, build_model, bundled, ModelTables, RowFamily, ScenarioId, VarFamily, VarKind, VarName,
};

fn micro(name: &str) -> (greenplan_core::PlanningInstance, ModelTables) {
    let inst = bundled::load(name).unwrap().unwrap();
    let tables = ModelTables::build(&inst).unwrap();
    (inst, tables)
}

#[test]
fn micro1_family_sizes_match_closed_form() {
    let (inst, tables) = micro("micro1");
    let m = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    let st = m.stats();
    let (e, c) = (inst.n_existing(), inst.candidate_sites().len());
    let (n, i) = (e + c, inst.test_points.len());
    let (y, p) = (inst.years, inst.periods());
    let new_types = inst.bs_types.len() - 1;
    let states: usize = inst.bs_types.iter().skip(1).map(|t| t.states.len()).sum();
    assert_eq!((e, c, i, y, p, new_types, states), (1, 2, 4, 3, 4, 2, 6));

    let vars = [
        (VarFamily::Z, new_types * c * y),
        (VarFamily::V, states * c * y * p),
        (VarFamily::U, c * y * p),
        (VarFamily::H, i * n * y * p),
        (VarFamily::X, states * c * y * p),
        (VarFamily::EB, c * y * p),
        (VarFamily::L, c * y * p),
    ];
    for (family, n) in vars {
        assert_eq!(st.vars(family), n, "{family:?}");
    }
    assert_eq!(st.variables, vars.iter().map(|v| v.1).sum::<usize>());
    assert_eq!(st.variables, 516);

    let rows = [
        (RowFamily::Allow, new_types * c),
        (RowFamily::Once, c),
        (RowFamily::SolarCap, c * y * p),
        (RowFamily::Assign, i * y * p),
        (RowFamily::CoverCand, i * c * y * p),
        (RowFamily::CoverAny, i * n * y * p),
        (RowFamily::CapExist, e * y * p),
        (RowFamily::CapCand, c * y * p),
        (RowFamily::SingleState, new_types * c * y * p),
        (RowFamily::BattDyn, c * y * (p - 1)),
        (RowFamily::BattWrap, c * y),
        (RowFamily::BattLo, c * y * p),
        (RowFamily::BattHi, c * y * p),
        (RowFamily::LossHi, c * y * p),
        (RowFamily::LinV, states * c * y * p),
        (RowFamily::LinU, states * c * y * p),
        (RowFamily::LinVU, states * c * y * p),
    ];
    for (family, n) in rows {
        assert_eq!(st.rows(family), n, "{family:?}");
    }
    assert_eq!(st.constraints, rows.iter().map(|r| r.1).sum::<usize>());
    assert_eq!(st.binaries, st.variables - 2 * c * y * p);
}

#[test]
fn every_row_name_is_unique() {
    let (inst, tables) = micro("micro3");
    let m = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    let mut names: Vec<String> = m.constraints.iter().map(|c| c.name()).collect();
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n);
}

#[test]
fn instance_without_candidates_builds_assignment_only_model() {
    let (mut inst, _) = micro("micro1");
    inst.sites.retain(|s| s.kind == SiteKind::Existing);
    let tables = ModelTables::build(&inst).unwrap();
    let m = build_model(&inst, &tables, ScenarioId::B.spec()).unwrap();
    let st = m.stats();
    assert_eq!(st.vars(VarFamily::Z), 0);
    assert_eq!(st.vars(VarFamily::V), 0);
    assert_eq!(st.variables, st.vars(VarFamily::H));
    assert_eq!(st.rows(RowFamily::CapCand), 0);
    assert!(st.rows(RowFamily::Assign) > 0);
    assert!(m.objective.is_empty());
    assert!(m.objective_constant > 0.0);
}

#[test]
fn scenarios_share_variables_and_rows_and_differ_in_bounds() {
    let (inst, tables) = micro("micro1");
    let b = build_model(&inst, &tables, ScenarioId::B.spec()).unwrap();
    let z = build_model(&inst, &tables, ScenarioId::Z.spec()).unwrap();
    let sz = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    let names = |m: &greenplan_core::MilpModel| m.variables.iter().map(|v| v.name).collect::<Vec<_>>();
    assert_eq!(names(&b), names(&z));
    assert_eq!(names(&b), names(&sz));
    assert_eq!(b.constraints, sz.constraints);
    assert_eq!(b.objective, sz.objective);
    assert!(b.free_binaries() < z.free_binaries());
    assert!(z.free_binaries() < sz.free_binaries());
    for id in ScenarioId::ALL {
        let m = build_model(&inst, &tables, id.spec()).unwrap();
        assert!(m.free_binaries() <= sz.free_binaries(), "{id}");
    }
}

#[test]
fn scenario_bounds_follow_the_scenario_rules() {
    let (inst, tables) = micro("micro1");
    let b = build_model(&inst, &tables, ScenarioId::B.spec()).unwrap();
    for var in &b.variables {
        let fixed = var.upper == 0.0;
        match var.name {
            VarName::Z { .. } => assert!(!fixed, "{}", var.name),
            VarName::V { s, .. } => assert_eq!(fixed, s != 2, "{}", var.name),
            VarName::U { .. } | VarName::X { .. } => assert!(fixed),
            VarName::H { .. } => assert!(!fixed),
            VarName::EB { .. } | VarName::L { .. } => {
                assert_eq!(var.kind, VarKind::Continuous);
                assert_eq!(var.upper, f64::INFINITY);
            }
        }
    }
    let first = build_model(&inst, &tables, ScenarioId::SZ0.spec()).unwrap();
    for var in &first.variables {
        if let VarName::Z { q, .. } = var.name {
            assert_eq!(var.upper == 0.0, q > 1);
        }
    }
    let fs = build_model(&inst, &tables, ScenarioId::FSZ.spec()).unwrap();
    for var in &fs.variables {
        if let VarName::Z { l, .. } = var.name {
            assert_eq!(var.upper == 0.0, !inst.bs_types[l].is_solar());
        }
    }
}

#[test]
fn building_is_deterministic_and_scenarios_are_idempotent() {
    let (inst, tables) = micro("micro2");
    let a = build_model(&inst, &tables, ScenarioId::SO.spec()).unwrap();
    let b = build_model(&inst, &tables, ScenarioId::SO.spec()).unwrap();
    assert_eq!(a, b);
    let mut c = a.clone();
    apply_scenario(&mut c, ScenarioId::SO.spec());
    assert_eq!(a, c);
    apply_scenario(&mut c, ScenarioId::B.spec());
    apply_scenario(&mut c, ScenarioId::SO.spec());
    assert_eq!(a, c);
}

#[test]
fn objective_coefficients_match_hand_computed_prices() {
    let (inst, tables) = micro("micro1");
    let m = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    let coef = |name: VarName| {
        let id = m.var_id(&name).unwrap();
        m.objective.iter().find(|&&(v, _)| v == id).map_or(0.0, |&(_, c)| c)
    };
    let r: f64 = 0.12;
    let infl: f64 = 0.0264;
    // plain micro on site 2 in year 2
    let expected = 6000.0 * (1.0 + infl) / (1.0 + r).powi(2);
    assert!((coef(VarName::Z { l: 1, j: 2, q: 2 }) - expected).abs() < 1e-9);
    // solar micro: station, 400 W of panels at 1.6 $/W, bank outlives the horizon
    let expected = (6000.0 + 1.6 * 400.0) * (1.0 + infl).powi(2) / (1.0 + r).powi(3);
    assert!((coef(VarName::Z { l: 2, j: 3, q: 3 }) - expected).abs() < 1e-9);
    // running the top micro state from the grid for a 6 h period, every day of year 1
    let kwh = 144.0 * 6.0 / 1000.0;
    let expected = 365.0 * 0.2 * kwh / (1.0 + r);
    assert!((coef(VarName::V { l: 1, s: 2, j: 2, q: 1, t: 3 }) - expected).abs() < 1e-9);
    assert!((coef(VarName::X { l: 2, s: 2, j: 2, q: 1, t: 3 }) + expected).abs() < 1e-9);
    assert_eq!(coef(VarName::H { i: 1, j: 1, q: 1, t: 1 }), 0.0);
    // legacy macro load is a constant
    let constant: f64 =
        (1..=3).map(|q| discount_factor(r, q) * inflation_factor(infl, q) * 365.0 * 0.2 * 1.35 * 24.0).sum();
    assert!((m.objective_constant - constant).abs() < 1e-9 * constant);
}

#[test]
fn carbon_tax_raises_every_energy_coefficient() {
    let (mut inst, _) = micro("micro1");
    let tables = ModelTables::build(&inst).unwrap();
    let base = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    inst.economics.carbon_tax = vec![30.0; inst.years];
    let taxed = build_model(&inst, &tables, ScenarioId::SZ.spec()).unwrap();
    for (a, b) in base.objective.iter().zip(&taxed.objective) {
        assert_eq!(a.0, b.0);
        match base.variables[a.0].name.family() {
            VarFamily::Z => assert_eq!(a.1, b.1),
            VarFamily::V => assert!(b.1 > a.1),
            VarFamily::X => assert!(b.1 < a.1),
            other => panic!("unexpected objective term on {other:?}"),
        }
    }
    assert!(taxed.objective_constant > base.objective_constant);
}
