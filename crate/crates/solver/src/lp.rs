//! CPLEX LP text writer.

use std::fmt::Write;

use greenplan_core::model::VarKind;
use greenplan_core::MilpModel;

use crate::text::{check_names, number};
use crate::SolverError;

/// Lines are wrapped before this many characters.
const LINE_WIDTH: usize = 100;

/// Appends `label: t1 + t2 ...` to `out`, wrapping long expressions onto
/// continuation lines that start with a space.
fn write_expression(out: &mut String, head: &str, terms: &[(String, f64)], tail: &str) {
    let mut line = String::from(head);
    let mut first = true;
    for (name, coef) in terms {
        let piece = match (first, *coef) {
            (true, c) if c == 1.0 => name.clone(),
            (true, c) if c == -1.0 => format!("- {name}"),
            (true, c) => format!("{} {name}", number(c)),
            (false, c) if c == 1.0 => format!("+ {name}"),
            (false, c) if c == -1.0 => format!("- {name}"),
            (false, c) if c < 0.0 => format!("- {} {name}", number(-c)),
            (false, c) => format!("+ {} {name}", number(c)),
        };
        if line.len() + piece.len() + 1 > LINE_WIDTH && !first {
            out.push_str(&line);
            out.push('\n');
            line = String::from(" ");
        } else {
            line.push(' ');
        }
        line.push_str(&piece);
        first = false;
    }
    if first {
        line.push_str(" 0");
    }
    if line.len() + tail.len() + 1 > LINE_WIDTH {
        out.push_str(&line);
        out.push('\n');
        line = String::new();
    }
    line.push(' ');
    line.push_str(tail);
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Serialises `model` as CPLEX LP text. The output depends only on the
/// model, so two exports of one model are byte-identical.
pub fn export_lp(model: &MilpModel) -> Result<String, SolverError> {
    check_names(model)?;
    let name = |v: usize| model.variables[v].name.to_string();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n");
    let obj: Vec<(String, f64)> = model.objective.iter().map(|&(v, c)| (name(v), c)).collect();
    let constant = match model.objective_constant {
        c if c == 0.0 => String::new(),
        c if c < 0.0 => format!("- {}", number(-c)),
        c => format!("+ {}", number(c)),
    };
    write_expression(&mut out, " obj:", &obj, &constant);

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let terms: Vec<(String, f64)> = c.terms.iter().map(|&(v, a)| (name(v), a)).collect();
        let tail = format!("{} {}", c.sense.symbol(), number(c.rhs));
        write_expression(&mut out, &format!(" {}:", c.name()), &terms, &tail);
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        let n = v.name.to_string();
        let (default_lo, default_hi) = match v.kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (0.0, f64::INFINITY),
        };
        if v.lower == default_lo && v.upper == default_hi {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {n} = {}", number(v.lower));
        } else if v.upper.is_infinite() {
            let _ = writeln!(out, " {n} >= {}", number(v.lower));
        } else {
            let lo = if v.lower.is_infinite() { "-inf".to_string() } else { number(v.lower) };
            let _ = writeln!(out, " {lo} <= {n} <= {}", number(v.upper));
        }
    }

    let binaries: Vec<String> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.to_string()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for n in binaries {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use greenplan_core::model::{RowFamily, Sense};
    use greenplan_core::VarName;

    use super::*;

    #[test]
    fn long_rows_wrap_but_keep_every_term() {
        let mut m = MilpModel::default();
        let ids: Vec<usize> =
            (1..=40).map(|i| m.add_var(VarName::H { i, j: 1, q: 1, t: 1 }, VarKind::Binary)).collect();
        m.add_row(RowFamily::Assign, vec![1, 1, 1], ids.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
        let text = export_lp(&m).unwrap();
        assert!(text.lines().all(|l| l.len() <= LINE_WIDTH));
        assert_eq!(text.matches("h[").count(), 80);
    }
}
