//! Fixed-form MPS writer.
//!
//! Fields start at the classic columns 2, 5, 15, 25, 40 and 50. Names longer
//! than eight characters push later fields to the right, which free-form
//! readers accept since fields stay separated by blanks.

use std::fmt::Write;

use greenplan_core::model::{Sense, VarKind};
use greenplan_core::MilpModel;

use crate::text::{check_names, number};
use crate::SolverError;

const OBJECTIVE_ROW: &str = "obj";

/// Writes one data line with fields padded to the fixed-form columns.
fn line(out: &mut String, fields: &[&str]) {
    const STARTS: [usize; 6] = [1, 4, 14, 24, 39, 49];
    let mut text = String::new();
    for (k, field) in fields.iter().enumerate() {
        let start = STARTS[k];
        if text.len() < start {
            text.extend(std::iter::repeat_n(' ', start - text.len()));
        } else {
            text.push(' ');
        }
        text.push_str(field);
    }
    out.push_str(&text);
    out.push('\n');
}

/// Serialises `model` as fixed-form MPS. The objective constant is carried
/// as the negated right-hand side of the objective row.
pub fn export_mps(model: &MilpModel) -> Result<String, SolverError> {
    check_names(model)?;
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    out.push_str("ROWS\n");
    line(&mut out, &["N", OBJECTIVE_ROW]);
    let row_names: Vec<String> = model.constraints.iter().map(|c| c.name()).collect();
    for (c, name) in model.constraints.iter().zip(&row_names) {
        let kind = match c.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        line(&mut out, &[kind, name]);
    }

    // column-major view of the matrix, rows in model order
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            columns[v].push((r, a));
        }
    }
    let mut objective = vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective {
        objective[v] = c;
    }

    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker = 0;
    for (v, var) in model.variables.iter().enumerate() {
        let integer = var.kind == VarKind::Binary;
        if integer != in_integer_block {
            let tag = if integer { "'INTORG'" } else { "'INTEND'" };
            line(&mut out, &["", &format!("MARKER{marker:04}"), "'MARKER'", "", tag]);
            marker += 1;
            in_integer_block = integer;
        }
        let name = var.name.to_string();
        let mut entries: Vec<(&str, f64)> = Vec::new();
        if objective[v] != 0.0 {
            entries.push((OBJECTIVE_ROW, objective[v]));
        }
        entries.extend(columns[v].iter().map(|&(r, a)| (row_names[r].as_str(), a)));
        if entries.is_empty() {
            // keep the column declared even without coefficients
            line(&mut out, &["", &name, OBJECTIVE_ROW, "0"]);
        }
        for (row, a) in entries {
            line(&mut out, &["", &name, row, &number(a)]);
        }
    }
    if in_integer_block {
        line(&mut out, &["", &format!("MARKER{marker:04}"), "'MARKER'", "", "'INTEND'"]);
    }

    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        line(&mut out, &["", "RHS", OBJECTIVE_ROW, &number(-model.objective_constant)]);
    }
    for (c, name) in model.constraints.iter().zip(&row_names) {
        if c.rhs != 0.0 {
            line(&mut out, &["", "RHS", name, &number(c.rhs)]);
        }
    }

    out.push_str("BOUNDS\n");
    for var in &model.variables {
        let name = var.name.to_string();
        match var.kind {
            VarKind::Binary if var.lower == var.upper => line(&mut out, &["FX", "BND", &name, &number(var.lower)]),
            VarKind::Binary if var.lower == 0.0 && var.upper == 1.0 => line(&mut out, &["BV", "BND", &name]),
            _ => {
                if var.lower == var.upper {
                    line(&mut out, &["FX", "BND", &name, &number(var.lower)]);
                    continue;
                }
                if var.lower == f64::NEG_INFINITY {
                    line(&mut out, &["MI", "BND", &name]);
                } else if var.lower != 0.0 || var.kind == VarKind::Binary {
                    line(&mut out, &["LO", "BND", &name, &number(var.lower)]);
                }
                if var.upper.is_finite() {
                    line(&mut out, &["UP", "BND", &name, &number(var.upper)]);
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}
