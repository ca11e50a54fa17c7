//! Shared fixtures for solver integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use greenplan_core::model::{Sense, VarKind};
use greenplan_core::{bundled, MilpModel, PlanningInstance};

pub fn micro(name: &str) -> PlanningInstance {
    bundled::load(name).unwrap().unwrap()
}

/// One candidate site, one year and a single 24-hour period: small enough
/// to enumerate every binary of the model.
pub fn one_period_instance(illumination: f64, tax: f64) -> PlanningInstance {
    let mut inst = micro("micro1");
    inst.years = 1;
    inst.period_hours = vec![24.0];
    inst.traffic_profile = vec![1.0];
    inst.illumination_w_m2 = vec![illumination];
    inst.sites.truncate(2);
    inst.test_points.retain(|p| p.id == 1 || p.id == 4);
    for p in &mut inst.test_points {
        p.peak_rate_by_year.truncate(1);
    }
    inst.economics.carbon_tax = vec![tax];
    inst.validate().unwrap();
    inst
}

/// Path of the bundled HiGHS adapter when `highspy` can be imported.
pub fn highs_adapter() -> Option<PathBuf> {
    let script = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../tools/highs_solve.py"));
    let ok =
        Command::new("python3").args(["-c", "import highspy"]).output().map(|o| o.status.success()).unwrap_or(false);
    ok.then_some(script)
}

/// Minimum of the model over every binary assignment within bounds. The
/// battery level of each site sits at its lowest allowed value and the spill
/// follows from the wrap-around row, which is exact for one-period days.
pub fn brute_force(model: &MilpModel) -> Option<f64> {
    let binaries: Vec<usize> = (0..model.variables.len())
        .filter(|&k| model.variables[k].kind == VarKind::Binary && model.variables[k].upper > model.variables[k].lower)
        .collect();
    assert!(binaries.len() <= 22, "{} binaries is too many to brute force", binaries.len());
    let mut values: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let lows: Vec<_> = model.constraints.iter().filter(|c| c.name().starts_with("batt_lo")).collect();
    let wraps: Vec<_> = model.constraints.iter().filter(|c| c.name().starts_with("batt_wrap")).collect();
    let continuous = |values: &mut Vec<f64>| {
        for row in &lows {
            let (eb, _) = *row.terms.iter().find(|&&(v, _)| model.variables[v].kind == VarKind::Continuous).unwrap();
            values[eb] = 0.0;
            values[eb] = row.activity(values).max(0.0);
        }
        for row in &wraps {
            let l = row
                .terms
                .iter()
                .map(|&(v, _)| v)
                .find(|&v| model.variables[v].name.to_string().starts_with("L["))
                .unwrap();
            values[l] = 0.0;
            values[l] = row.rhs - row.activity(values);
        }
    };
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << binaries.len()) {
        for (bit, &k) in binaries.iter().enumerate() {
            values[k] = ((mask >> bit) & 1) as f64;
        }
        continuous(&mut values);
        let in_bounds = model.variables.iter().zip(&values).all(|(v, &x)| x >= v.lower - 1e-9 && x <= v.upper + 1e-9);
        let feasible = in_bounds && model.constraints.iter().all(|c| c.sense.holds(c.activity(&values), c.rhs, 1e-9));
        if feasible {
            let z = model.objective_value(&values);
            if best.is_none_or(|b| z < b) {
                best = Some(z);
            }
        }
    }
    best
}

/// Minimal reader of the LP dialect the exporter writes.
#[derive(Debug, Default)]
pub struct ParsedLp {
    pub objective: BTreeMap<String, f64>,
    pub constant: f64,
    pub rows: BTreeMap<String, (BTreeMap<String, f64>, Sense, f64)>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Reads `[sign] [coef] name ...` terms until a sense token or the end.
fn read_terms(tokens: &[&str], pos: &mut usize) -> (BTreeMap<String, f64>, f64) {
    let mut terms = BTreeMap::new();
    let mut constant = 0.0;
    while *pos < tokens.len() && !matches!(tokens[*pos], "<=" | ">=" | "=") {
        let mut sign = 1.0;
        if tokens[*pos] == "+" || tokens[*pos] == "-" {
            sign = if tokens[*pos] == "-" { -1.0 } else { 1.0 };
            *pos += 1;
        }
        let tok = tokens[*pos];
        *pos += 1;
        if is_number(tok) {
            let value: f64 = tok.parse().unwrap();
            let next = tokens.get(*pos).copied();
            match next {
                Some(n) if !is_number(n) && !matches!(n, "+" | "-" | "<=" | ">=" | "=") => {
                    *pos += 1;
                    *terms.entry(n.to_string()).or_insert(0.0) += sign * value;
                }
                _ => constant += sign * value,
            }
        } else {
            *terms.entry(tok.to_string()).or_insert(0.0) += sign;
        }
    }
    (terms, constant)
}

pub fn parse_lp(text: &str) -> ParsedLp {
    let mut out = ParsedLp::default();
    let mut section = "";
    let mut body: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for line in text.lines() {
        match line.trim() {
            s @ ("Minimize" | "Subject To" | "Bounds" | "Binary" | "End") => section = s,
            s if s.starts_with('\\') => {}
            _ => body.entry(section).or_default().extend(line.split_whitespace()),
        }
    }
    let obj = body.remove("Minimize").unwrap_or_default();
    assert_eq!(obj.first(), Some(&"obj:"));
    let mut pos = 1;
    (out.objective, out.constant) = read_terms(&obj, &mut pos);
    let rows = body.remove("Subject To").unwrap_or_default();
    let mut pos = 0;
    while pos < rows.len() {
        let name = rows[pos].strip_suffix(':').expect("row label").to_string();
        pos += 1;
        let (terms, constant) = read_terms(&rows, &mut pos);
        assert_eq!(constant, 0.0, "{name}");
        let sense = match rows[pos] {
            "<=" => Sense::Le,
            ">=" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs: f64 = rows[pos + 1].parse().unwrap();
        pos += 2;
        assert!(out.rows.insert(name.clone(), (terms, sense, rhs)).is_none(), "duplicate row {name}");
    }
    let bounds = body.remove("Bounds").unwrap_or_default();
    let mut pos = 0;
    while pos < bounds.len() {
        if is_number(bounds[pos]) || bounds[pos] == "-inf" {
            let lo = if bounds[pos] == "-inf" { f64::NEG_INFINITY } else { bounds[pos].parse().unwrap() };
            out.bounds.insert(bounds[pos + 2].to_string(), (lo, bounds[pos + 4].parse().unwrap()));
            pos += 5;
        } else {
            let value: f64 = bounds[pos + 2].parse().unwrap();
            let b = if bounds[pos + 1] == "=" { (value, value) } else { (value, f64::INFINITY) };
            out.bounds.insert(bounds[pos].to_string(), b);
            pos += 3;
        }
    }
    out.binaries = body.remove("Binary").unwrap_or_default().into_iter().map(String::from).collect();
    out
}
