//! Acceptance suite. Runs every criterion in turn, prints one PASS or FAIL
//! line per criterion and exits non-zero when any criterion fails.
//!
//! Criteria that need an external solver use the bundled HiGHS adapter and
//! fail when `highspy` cannot be imported.

mod common;

use std::time::{Duration, Instant};

use common::highs;
use greenplan_cli::pipeline::{assess, solar_installations, solve_scenarios, tax_sweep, with_tax, ScenarioOutcome};
use greenplan_core::demand::{battery_bounds, demand_energy_for_type, max_bitrate};
use greenplan_core::names::VarFamily;
use greenplan_core::validate::{check_feasibility, simulate_battery};
use greenplan_core::{
    build_model, bundled, MilpModel, ModelTables, PlanSolution, PlanningInstance, ScenarioId, VarName,
};
use greenplan_solver::{
    close_relative, export_lp, export_mps, solve, solve_enumerate, ModelFormat, SolveStatus, SolverConfig, SolverKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBJECTIVE_TOLERANCE: f64 = 1e-6;
const BATTERY_TOLERANCE_KWH: f64 = 1e-6;
const INVERSE_TOLERANCE: f64 = 1e-9;
const LARGE_INSTANCES: [&str; 2] = ["p1-like", "p2-like"];
const TIME_LIMIT: f64 = 1800.0;
/// MIP gap for large instances.
const LARGE_GAP: f64 = 0.01;
/// Instances whose scenarios do not reach proven optimality within the time
/// budget and are nested at `LARGE_GAP` instead.
const GAP_LIMITED: [&str; 1] = ["p2-like"];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn pass(detail: impl Into<String>) -> Self {
        Self { pass: true, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self { pass: false, detail: detail.into() }
    }
}

fn load(name: &str) -> (PlanningInstance, ModelTables) {
    let inst = bundled::load(name).expect("bundled instance").expect("valid instance");
    let tables = ModelTables::build(&inst).expect("tables build");
    (inst, tables)
}

fn enumerator() -> SolverConfig {
    SolverConfig { kind: SolverKind::Enumerate { max_binaries: 24 }, ..SolverConfig::default() }
}

fn free_installation_binaries(model: &MilpModel) -> usize {
    model.variables.iter().filter(|v| v.name.family() == VarFamily::Z && v.upper > v.lower).count()
}

fn no_highs() -> Verdict {
    Verdict::fail("HiGHS adapter unavailable (python3 cannot import highspy)")
}

/// Solver outcomes gathered by the first two criteria for the validator
/// criterion.
#[derive(Default)]
struct Runs {
    outcomes: Vec<(String, ScenarioOutcome)>,
    solve_errors: Vec<String>,
}

fn oracle_equivalence(runs: &mut Runs) -> Verdict {
    let Some(config) = highs(ModelFormat::Lp, 0.0, TIME_LIMIT) else { return no_highs() };
    let start = Instant::now();
    let mut compared = 0;
    let mut problems = Vec::new();
    for name in bundled::MICRO {
        let (inst, tables) = load(name);
        for id in ScenarioId::ALL {
            let model = build_model(&inst, &tables, id.spec()).expect("model builds");
            let free = free_installation_binaries(&model);
            if free > 24 {
                problems.push(format!("{name}/{id} has {free} free installation binaries"));
                continue;
            }
            let exact = solve_enumerate(&model, 24);
            let external = solve(&model, &config);
            let (exact, external) = match (exact, external) {
                (Ok(e), Ok(x)) => (e, x),
                (e, x) => {
                    problems.push(format!("{name}/{id}: {:?} {:?}", e.err(), x.err()));
                    continue;
                }
            };
            if exact.status != SolveStatus::Optimal || external.status != SolveStatus::Optimal {
                problems.push(format!("{name}/{id}: status {} vs {}", exact.status.as_str(), external.status.as_str()));
            }
            match (exact.objective, external.objective) {
                (Some(a), Some(b)) if close_relative(a, b, OBJECTIVE_TOLERANCE) => compared += 1,
                (a, b) => problems.push(format!("{name}/{id}: enumeration {a:?} vs HiGHS {b:?}")),
            }
            for (who, raw) in [("enumerate", exact), ("highs", external)] {
                match assess(&inst, &tables, id, raw, None) {
                    Ok(o) => runs.outcomes.push((format!("{name}/{id}/{who}"), o)),
                    Err(e) => runs.solve_errors.push(format!("{name}/{id}/{who}: {e}")),
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        problems.push(format!("took {elapsed:.1?}, budget 5 min"));
    }
    if problems.is_empty() {
        Verdict::pass(format!("{compared} micro models agree, {elapsed:.1?}"))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

/// `(smaller, larger)` pairs every set of optimal objectives must respect.
const NESTING: [(ScenarioId, ScenarioId); 7] = [
    (ScenarioId::SZ, ScenarioId::S),
    (ScenarioId::S, ScenarioId::B),
    (ScenarioId::SZ, ScenarioId::Z),
    (ScenarioId::Z, ScenarioId::O),
    (ScenarioId::O, ScenarioId::B),
    (ScenarioId::SZ, ScenarioId::SZ0),
    (ScenarioId::SZ, ScenarioId::FSZ),
];

fn scenario_nesting(runs: &mut Runs) -> Verdict {
    if highs(ModelFormat::Lp, 0.0, TIME_LIMIT).is_none() {
        return no_highs();
    }
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for name in bundled::names() {
        let gap = if GAP_LIMITED.contains(&name) { LARGE_GAP } else { 0.0 };
        let config = highs(ModelFormat::Lp, gap, TIME_LIMIT).expect("adapter checked above");
        let (inst, tables) = load(name);
        let start = Instant::now();
        let outcomes = match solve_scenarios(&inst, &tables, &ScenarioId::ALL, &config, true) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                runs.solve_errors.push(format!("{name}: {e}"));
                continue;
            }
        };
        let z = |id: ScenarioId| outcomes.iter().find(|o| o.scenario == id).map(|o| o.objective).unwrap_or(f64::NAN);
        for (small, large) in NESTING {
            let (a, b) = (z(small), z(large));
            if !(a <= b + OBJECTIVE_TOLERANCE * b.abs()) {
                problems.push(format!("{name}: Z({small}) = {a} > Z({large}) = {b}"));
            }
        }
        for o in &outcomes {
            let proven = match o.status {
                SolveStatus::Optimal => true,
                SolveStatus::Feasible { gap: Some(g) } => g <= gap,
                _ => false,
            };
            if !proven {
                problems.push(format!("{name}/{}: status {} gap {:?}", o.scenario, o.status.as_str(), o.gap));
            }
        }
        summary.push(format!(
            "{name} S+Z {:.2} <= B {:.2} in {:.0?}",
            z(ScenarioId::SZ),
            z(ScenarioId::B),
            start.elapsed()
        ));
        runs.outcomes.extend(outcomes.into_iter().map(|o| (format!("{name}/{}/run", o.scenario), o)));
    }
    if problems.is_empty() {
        Verdict::pass(summary.join(", "))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn validator_oracle(runs: &Runs) -> Verdict {
    let mut problems: Vec<String> = runs.solve_errors.clone();
    for (label, o) in &runs.outcomes {
        if !o.violations.is_feasible() {
            problems.push(format!("{label}: {} violations", o.violations.violations.len()));
        } else if !o.is_valid() {
            let cost = o.costs.as_ref().map(|c| c.total);
            problems.push(format!("{label}: priced {cost:?} vs objective {}", o.objective));
        }
    }
    if runs.outcomes.is_empty() {
        problems.push("no solver runs to check".into());
    }
    if problems.is_empty() {
        Verdict::pass(format!("{} solutions feasible with matching cost", runs.outcomes.len()))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn no_tax_solar() -> Verdict {
    let Some(config) = highs(ModelFormat::Lp, LARGE_GAP, TIME_LIMIT) else { return no_highs() };
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for name in LARGE_INSTANCES {
        let (inst, tables) = load(name);
        let inst = with_tax(&inst, 0.0, 0.0);
        let model = build_model(&inst, &tables, ScenarioId::SZ.spec()).expect("model builds");
        let start = Instant::now();
        let raw = match solve(&model, &config) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs_f64(TIME_LIMIT) {
            problems.push(format!("{name}: took {elapsed:.0?}"));
        }
        if !raw.status.has_solution() {
            problems.push(format!("{name}: status {}", raw.status.as_str()));
            continue;
        }
        let gap = raw.gap.unwrap_or(0.0);
        if gap > LARGE_GAP {
            problems.push(format!("{name}: gap {gap}"));
        }
        match assess(&inst, &tables, ScenarioId::SZ, raw, None) {
            Ok(o) if o.is_valid() => {
                let solar = solar_installations(&inst, &o.plan);
                if solar > 0 {
                    problems.push(format!("{name}: {solar} solar stations installed"));
                }
                summary.push(format!("{name} 0 solar, gap {gap:.1e}, {elapsed:.0?}"));
            }
            Ok(o) => problems.push(format!("{name}: invalid plan {}", o.violations)),
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    if problems.is_empty() {
        Verdict::pass(summary.join(", "))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn tax_threshold() -> Verdict {
    let Some(config) = highs(ModelFormat::Lp, 0.0, TIME_LIMIT) else { return no_highs() };
    let levels: Vec<(f64, f64)> = (0..=5).map(|k| (10.0 * k as f64, 10.0 * k as f64)).collect();
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for name in ["micro1", "micro2"] {
        let (inst, tables) = load(name);
        let rows = match tax_sweep(&inst, &tables, ScenarioId::SZ, &levels, &config, Some(&enumerator())) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        for r in &rows {
            if !r.outcome.is_valid() || !r.oracle_agrees() {
                problems.push(format!(
                    "{name} ({}, {}): objective {} oracle {:?} valid {}",
                    r.tax_start,
                    r.tax_step,
                    r.outcome.objective,
                    r.oracle_objective,
                    r.outcome.is_valid()
                ));
            }
        }
        let counts: Vec<usize> = rows.iter().map(|r| r.solar_count).collect();
        if name != "micro1" {
            summary.push(format!("{name} solar counts {counts:?}"));
            continue;
        }
        match counts.iter().position(|&c| c > 0) {
            Some(k) if counts[0] == 0 => summary.push(format!("{name} adopts solar at {:?}", levels[k])),
            _ => problems.push(format!("{name}: solar counts {counts:?} show no switch")),
        }
    }
    if problems.is_empty() {
        Verdict::pass(summary.join(", "))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

/// Pins every installation binary of `model` to a random choice: each
/// candidate site stays empty or gets one allowed type in one year. Returns
/// `false` when the choice conflicts with the scenario's bounds.
fn pin_random_installations(inst: &PlanningInstance, model: &mut MilpModel, rng: &mut ChaCha8Rng) -> bool {
    let mut choice = Vec::new();
    for site in inst.candidate_sites() {
        let pick = if rng.gen_bool(0.25) || site.allowed_types.is_empty() {
            None
        } else {
            let l = site.allowed_types[rng.gen_range(0..site.allowed_types.len())];
            Some((l, rng.gen_range(1..=inst.years)))
        };
        choice.push((site.id, pick));
    }
    for var in &mut model.variables {
        if let VarName::Z { l, j, q } = var.name {
            let pick = choice.iter().find(|(id, _)| *id == j).and_then(|(_, p)| *p);
            let value = if pick == Some((l, q)) { 1.0 } else { 0.0 };
            if value < var.lower || value > var.upper {
                return false;
            }
            var.lower = value;
            var.upper = value;
        }
    }
    true
}

fn battery_physics() -> Verdict {
    const SAMPLES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba77);
    let instances: Vec<(PlanningInstance, ModelTables)> = bundled::MICRO.iter().map(|n| load(n)).collect();
    let scenarios: Vec<ScenarioId> = ScenarioId::ALL.into_iter().filter(|s| s.spec().uses_solar()).collect();
    let mut accepted = 0;
    let mut attempts = 0;
    let mut with_solar = 0;
    let mut cycling = 0;
    let mut problems = Vec::new();
    while accepted < SAMPLES && attempts < 50 * SAMPLES {
        attempts += 1;
        let (base, tables) = &instances[rng.gen_range(0..instances.len())];
        let scenario = scenarios[rng.gen_range(0..scenarios.len())];
        let inst = with_tax(base, rng.gen_range(0.0..300.0), rng.gen_range(0.0..100.0));
        let mut model = build_model(&inst, tables, scenario.spec()).expect("model builds");
        if !pin_random_installations(&inst, &mut model, &mut rng) {
            continue;
        }
        let raw = match solve_enumerate(&model, 0) {
            Ok(r) if r.status == SolveStatus::Optimal => r,
            Ok(_) => continue,
            Err(e) => {
                problems.push(format!("enumeration failed: {e}"));
                break;
            }
        };
        accepted += 1;
        let plan = PlanSolution::from_named_values(&inst, raw.pairs()).expect("solution maps onto the plan");
        match check_feasibility(&inst, tables, &plan, BATTERY_TOLERANCE_KWH) {
            Ok(rep) if rep.is_feasible() => {}
            Ok(rep) => problems.push(format!("sample {accepted} ({scenario}) infeasible: {rep}")),
            Err(e) => problems.push(format!("sample {accepted}: {e}")),
        }
        let days = match simulate_battery(&inst, &tables.solar, &plan, BATTERY_TOLERANCE_KWH) {
            Ok(d) => d,
            Err(e) => {
                problems.push(format!("sample {accepted} ({scenario}): {e}"));
                continue;
            }
        };
        with_solar += usize::from(solar_installations(&inst, &plan) > 0);
        for day in &days {
            if day.balance.abs() > BATTERY_TOLERANCE_KWH {
                problems
                    .push(format!("sample {accepted}: site {} year {} balance {}", day.site, day.year, day.balance));
            }
            let j = inst.site_index(day.site).expect("ledger site exists");
            let (mut lo, mut hi) = (0.0, 0.0);
            for (l, ty) in inst.bs_types.iter().enumerate() {
                if ty.is_solar() {
                    for p in 1..=day.year {
                        if plan.z(l, j, p) == 1 {
                            let (a, b) = battery_bounds(&inst, l, p, day.year).expect("solar type");
                            lo += a;
                            hi += b;
                        }
                    }
                }
            }
            for &level in &day.level {
                if level < lo - BATTERY_TOLERANCE_KWH || level > hi + BATTERY_TOLERANCE_KWH {
                    problems.push(format!(
                        "sample {accepted}: site {} year {} level {level} outside [{lo}, {hi}]",
                        day.site, day.year
                    ));
                }
            }
            cycling += usize::from(day.battery_draw.iter().any(|&d| d > BATTERY_TOLERANCE_KWH));
        }
    }
    if accepted < SAMPLES {
        problems.push(format!("only {accepted} feasible samples in {attempts} draws"));
    }
    if with_solar == 0 || cycling == 0 {
        problems.push(format!("samples never exercise a battery ({with_solar} with solar, {cycling} cycling days)"));
    }
    problems.truncate(5);
    if problems.is_empty() {
        Verdict::pass(format!(
            "{accepted} plans from {attempts} draws, {with_solar} with solar, {cycling} battery-cycling days"
        ))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn appendix_math() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa99e_0d1c);
    let mut problems = Vec::new();
    let base = bundled::load("micro1").expect("bundled").expect("valid");
    let site = base.n_existing();
    let l = base.sites[site].allowed_types[0];
    let top = base.bs_types[l].max_state();
    let t = base.traffic_profile.iter().position(|&f| f == 1.0).expect("a peak period") + 1;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let d: f64 = rng.gen_range(5.0..3000.0);
        let rho: f64 = rng.gen_range(0.5..80.0);
        let w: f64 = rng.gen_range(1.0..20.0);
        let mut inst = base.clone();
        let (x, y) = inst.sites[site].position;
        inst.test_points[0].position = (x + d, y);
        inst.test_points[0].activation_year = 1;
        inst.test_points[0].peak_rate_by_year = vec![rho; inst.years];
        inst.bs_types[l].bandwidth_mhz = w;
        let rate = inst.rate(0, 1, t);
        let energy = demand_energy_for_type(&inst, 0, site, l, 1, t).expect("in range");
        let watts = energy * 1000.0 / inst.period_hours[t - 1];
        inst.bs_types[l].states[top].transmit_w = watts;
        let back = max_bitrate(&inst, 0, site, l, top).expect("in range");
        let err = (back - rate).abs() / rate;
        worst = worst.max(err);
        if err > INVERSE_TOLERANCE {
            problems.push(format!("sample {k} (d {d}, rate {rho}, W {w}): {back} vs {rate}"));
        }
    }
    let mut entries = 0usize;
    for name in bundled::names() {
        let (inst, tables) = load(name);
        for (l, ty) in inst.bs_types.iter().enumerate() {
            for s in 0..ty.states.len() {
                for s2 in 0..ty.states.len() {
                    if ty.states[s2].transmit_w < ty.states[s].transmit_w {
                        continue;
                    }
                    for i in 0..inst.test_points.len() {
                        for j in 0..inst.sites.len() {
                            for q in 1..=inst.years {
                                for t in 1..=inst.periods() {
                                    entries += 1;
                                    if tables.coverage.get(i, j, l, s, q, t) && !tables.coverage.get(i, j, l, s2, q, t)
                                    {
                                        problems.push(format!(
                                            "{name}: coverage lost from state {s} to {s2} at {i},{j},{l},{q},{t}"
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    problems.truncate(5);
    if problems.is_empty() {
        Verdict::pass(format!(
            "100 inverse samples, worst relative error {worst:.1e}; {entries} coverage pairs monotone"
        ))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn format_fidelity() -> Verdict {
    let mut problems = Vec::new();
    let mut solved = 0;
    match (highs(ModelFormat::Lp, 0.0, TIME_LIMIT), highs(ModelFormat::Mps, 0.0, TIME_LIMIT)) {
        (Some(lp), Some(mps)) => {
            let mut cases: Vec<(&str, ScenarioId)> =
                bundled::MICRO.iter().flat_map(|&n| ScenarioId::ALL.into_iter().map(move |s| (n, s))).collect();
            cases.push(("p1-like", ScenarioId::B));
            for (name, id) in cases {
                let (inst, tables) = load(name);
                let model = build_model(&inst, &tables, id.spec()).expect("model builds");
                match (solve(&model, &lp), solve(&model, &mps)) {
                    (Ok(a), Ok(b)) => match (a.objective, b.objective) {
                        (Some(x), Some(y)) if close_relative(x, y, OBJECTIVE_TOLERANCE) => solved += 1,
                        (x, y) => problems.push(format!("{name}/{id}: LP {x:?} vs MPS {y:?}")),
                    },
                    (a, b) => problems.push(format!("{name}/{id}: {:?} {:?}", a.err(), b.err())),
                }
            }
        }
        _ => problems.push("HiGHS adapter unavailable (python3 cannot import highspy)".into()),
    }
    let mut exports = 0;
    for name in bundled::names() {
        let (inst, tables) = load(name);
        let again = ModelTables::build(&inst).expect("tables build");
        for id in ScenarioId::ALL {
            let a = build_model(&inst, &tables, id.spec()).expect("model builds");
            let b = build_model(&inst, &again, id.spec()).expect("model builds");
            let same_lp = export_lp(&a).ok() == export_lp(&b).ok() && export_lp(&a).is_ok();
            let same_mps = export_mps(&a).ok() == export_mps(&b).ok() && export_mps(&a).is_ok();
            if !(same_lp && same_mps) {
                problems.push(format!("{name}/{id}: exports differ between builds"));
            }
            exports += 2;
        }
    }
    if problems.is_empty() {
        Verdict::pass(format!("{solved} models agree across formats, {exports} exports reproduce byte for byte"))
    } else {
        Verdict::fail(problems.join("; "))
    }
}

fn main() {
    let mut runs = Runs::default();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Runs) -> Verdict>)> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("scenario nesting", Box::new(scenario_nesting)),
        ("validator oracle", Box::new(|r: &mut Runs| validator_oracle(r))),
        ("no-tax solar", Box::new(|_: &mut Runs| no_tax_solar())),
        ("tax threshold", Box::new(|_: &mut Runs| tax_threshold())),
        ("battery physics", Box::new(|_: &mut Runs| battery_physics())),
        ("appendix math", Box::new(|_: &mut Runs| appendix_math())),
        ("format fidelity", Box::new(|_: &mut Runs| format_fidelity())),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = run(&mut runs);
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {name}: {} ({}) [{:.1?}]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
