//! Solution file readers: the HiGHS native text solution and a generic
//! two-column `name value` format.
//!
//! The generic format may carry `# key value` header lines for `status`,
//! `objective`, `bound` and `gap`; blank lines and other `#` lines are
//! ignored.

use std::collections::BTreeMap;

use crate::SolverError;

/// Contents of a solution file before mapping to a [`crate::SolveStatus`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedSolution {
    /// Status text as the solver wrote it, lower-cased.
    pub status: Option<String>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub values: BTreeMap<String, f64>,
}

fn parse_number(text: &str, line: usize) -> Result<f64, SolverError> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    t.parse::<f64>().map_err(|_| SolverError::Parse { line, message: format!("`{t}` is not a number") })
}

/// Reads either format, recognised by the HiGHS `Model status` header.
pub fn parse_solution(text: &str) -> Result<ParsedSolution, SolverError> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    if first == Some("Model status") {
        parse_highs(text)
    } else {
        parse_generic(text)
    }
}

/// HiGHS `writeSolution` output in raw style.
pub fn parse_highs(text: &str) -> Result<ParsedSolution, SolverError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out = ParsedSolution::default();
    let mut k = 0;
    let next_non_empty = |k: &mut usize| -> Option<(usize, &str)> {
        while *k < lines.len() {
            let l = lines[*k].trim();
            *k += 1;
            if !l.is_empty() {
                return Some((*k, l));
            }
        }
        None
    };
    match next_non_empty(&mut k) {
        Some((_, "Model status")) => {}
        _ => return Err(SolverError::Parse { line: 1, message: "missing `Model status` header".into() }),
    }
    let (_, status) =
        next_non_empty(&mut k).ok_or(SolverError::Parse { line: k, message: "missing model status".into() })?;
    out.status = Some(status.to_ascii_lowercase());
    while let Some((ln, l)) = next_non_empty(&mut k) {
        if l == "# Primal solution values" {
            let (ln, feas) = next_non_empty(&mut k)
                .ok_or(SolverError::Parse { line: ln, message: "truncated primal section".into() })?;
            if feas == "None" {
                return Ok(out);
            }
            let (ln, obj) =
                next_non_empty(&mut k).ok_or(SolverError::Parse { line: ln, message: "missing objective".into() })?;
            let value = obj
                .strip_prefix("Objective")
                .ok_or(SolverError::Parse { line: ln, message: format!("expected `Objective`, got `{obj}`") })?;
            out.objective = Some(parse_number(value, ln)?);
            let (ln, cols) = next_non_empty(&mut k)
                .ok_or(SolverError::Parse { line: ln, message: "missing column count".into() })?;
            let count = cols
                .strip_prefix("# Columns")
                .and_then(|n| n.trim().parse::<usize>().ok())
                .ok_or(SolverError::Parse { line: ln, message: format!("expected `# Columns n`, got `{cols}`") })?;
            for _ in 0..count {
                let (ln, entry) = next_non_empty(&mut k)
                    .ok_or(SolverError::Parse { line: ln, message: "truncated columns".into() })?;
                let (name, value) = split_pair(entry, ln)?;
                out.values.insert(name.to_string(), value);
            }
            return Ok(out);
        }
    }
    Ok(out)
}

fn split_pair(line: &str, ln: usize) -> Result<(&str, f64), SolverError> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(name), Some(value), None) => Ok((name, parse_number(value, ln)?)),
        _ => Err(SolverError::Parse { line: ln, message: format!("expected `name value`, got `{line}`") }),
    }
}

/// Generic two-column format.
pub fn parse_generic(text: &str) -> Result<ParsedSolution, SolverError> {
    let mut out = ParsedSolution::default();
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let mut it = header.split_whitespace();
            match (it.next(), it.next()) {
                (Some("status"), Some(v)) => out.status = Some(v.to_ascii_lowercase()),
                (Some("objective"), Some(v)) => out.objective = Some(parse_number(v, ln)?),
                (Some("bound"), Some(v)) => out.bound = Some(parse_number(v, ln)?),
                (Some("gap"), Some(v)) => out.gap = Some(parse_number(v, ln)?),
                _ => {}
            }
            continue;
        }
        let (name, value) = split_pair(line, ln)?;
        if out.values.insert(name.to_string(), value).is_some() {
            return Err(SolverError::Parse { line: ln, message: format!("duplicate value for `{name}`") });
        }
    }
    Ok(out)
}

/// Writes values in the generic format, one per line in name order.
pub fn write_generic(values: &BTreeMap<String, f64>) -> String {
    let mut out = String::new();
    for (name, value) in values {
        out.push_str(name);
        out.push(' ');
        out.push_str(&crate::text::number(*value));
        out.push('\n');
    }
    out
}

/// `# bound` and `# gap` lines a solver printed on standard output.
pub fn parse_stdout_summary(stdout: &str) -> (Option<f64>, Option<f64>) {
    let mut bound = None;
    let mut gap = None;
    for line in stdout.lines() {
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some("#"), Some("bound"), Some(v)) => bound = parse_number(v, 0).ok(),
            (Some("#"), Some("gap"), Some(v)) => gap = parse_number(v, 0).ok(),
            _ => {}
        }
    }
    (bound, gap)
}
