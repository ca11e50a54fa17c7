//! In-memory mixed-integer linear program: variables with bounds, linear
//! rows and a minimisation objective with a constant term.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::names::{VarFamily, VarName};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: VarName,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Self::Le => lhs <= rhs + tol,
            Self::Ge => lhs >= rhs - tol,
            Self::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Le => "<=",
            Self::Eq => "=",
            Self::Ge => ">=",
        }
    }
}

/// Constraint families of the planning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowFamily {
    /// A type is installed on a site only where it is allowed.
    Allow,
    /// At most one installation per candidate site.
    Once,
    /// Battery mode needs an installed solar type.
    SolarCap,
    /// Every active test point is assigned.
    Assign,
    /// Candidate sites serve only points covered by the chosen state.
    CoverCand,
    /// No site serves a point that no station could reach.
    CoverAny,
    /// Served energy within the legacy station's transmit budget.
    CapExist,
    /// Served energy within the chosen state's transmit budget.
    CapCand,
    /// An installed station runs in exactly one state.
    SingleState,
    /// Battery level recursion between consecutive periods.
    BattDyn,
    /// Battery level wrap-around from the last period to the first.
    BattWrap,
    BattLo,
    BattHi,
    /// Spill never exceeds solar production.
    LossHi,
    /// `x <= v`.
    LinV,
    /// `x <= u`.
    LinU,
    /// `x >= v + u - 1`.
    LinVU,
}

impl RowFamily {
    pub const ALL: [RowFamily; 17] = [
        Self::Allow,
        Self::Once,
        Self::SolarCap,
        Self::Assign,
        Self::CoverCand,
        Self::CoverAny,
        Self::CapExist,
        Self::CapCand,
        Self::SingleState,
        Self::BattDyn,
        Self::BattWrap,
        Self::BattLo,
        Self::BattHi,
        Self::LossHi,
        Self::LinV,
        Self::LinU,
        Self::LinVU,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Self::Allow => "allow",
            Self::Once => "once",
            Self::SolarCap => "solar_cap",
            Self::Assign => "assign",
            Self::CoverCand => "cover_cand",
            Self::CoverAny => "cover_any",
            Self::CapExist => "cap_exist",
            Self::CapCand => "cap_cand",
            Self::SingleState => "single_state",
            Self::BattDyn => "batt_dyn",
            Self::BattWrap => "batt_wrap",
            Self::BattLo => "batt_lo",
            Self::BattHi => "batt_hi",
            Self::LossHi => "loss_hi",
            Self::LinV => "lin_v",
            Self::LinU => "lin_u",
            Self::LinVU => "lin_vu",
        }
    }

    pub fn from_prefix(prefix: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.prefix() == prefix)
    }
}

impl fmt::Display for RowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub family: RowFamily,
    /// Index tuple of the row, in the order of its name.
    pub index: Vec<u64>,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn name(&self) -> String {
        let idx: Vec<String> = self.index.iter().map(u64::to_string).collect();
        format!("{}[{}]", self.family.prefix(), idx.join(","))
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }
}

/// Index sets the model was built over, kept so scenario rules can be
/// re-applied without the instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelLayout {
    /// Number of power states of each type.
    pub states_per_type: Vec<usize>,
    pub solar_types: Vec<bool>,
    pub existing_sites: Vec<u32>,
    pub candidate_sites: Vec<u32>,
    pub test_points: Vec<u32>,
    pub years: usize,
    pub periods: usize,
}

impl ModelLayout {
    pub fn max_state(&self, l: usize) -> usize {
        self.states_per_type[l] - 1
    }

    pub fn has_solar_type(&self) -> bool {
        self.solar_types.iter().skip(1).any(|&s| s)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Objective coefficients, sorted by variable id, minimised.
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
    pub layout: ModelLayout,
    /// Scenario the current bounds implement, if any.
    pub scenario: Option<crate::scenario::ScenarioId>,
    pub warnings: Vec<String>,
    index: HashMap<VarName, VarId>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>, layout: ModelLayout) -> Self {
        Self { name: name.into(), layout, ..Self::default() }
    }

    /// Adds a variable; panics on a duplicate name, which is a builder bug.
    pub fn add_var(&mut self, name: VarName, kind: VarKind) -> VarId {
        let id = self.variables.len();
        let upper = match kind {
            VarKind::Binary => 1.0,
            VarKind::Continuous => f64::INFINITY,
        };
        let previous = self.index.insert(name, id);
        assert!(previous.is_none(), "duplicate variable {name}");
        self.variables.push(Variable { name, kind, lower: 0.0, upper });
        id
    }

    pub fn add_row(
        &mut self,
        family: RowFamily,
        index: Vec<u64>,
        mut terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        terms.retain(|&(_, c)| c != 0.0);
        terms.sort_by_key(|&(v, _)| v);
        merge_duplicates(&mut terms);
        self.constraints.push(Constraint { family, index, terms, sense, rhs });
    }

    pub fn set_objective(&mut self, mut terms: Vec<(VarId, f64)>, constant: f64) {
        terms.retain(|&(_, c)| c != 0.0);
        terms.sort_by_key(|&(v, _)| v);
        merge_duplicates(&mut terms);
        self.objective = terms;
        self.objective_constant = constant;
    }

    pub fn var_id(&self, name: &VarName) -> Option<VarId> {
        self.index.get(name).copied()
    }

    /// Rebuilds the name index, needed after deserialising or editing
    /// `variables` directly.
    pub fn reindex(&mut self) {
        self.index = self.variables.iter().enumerate().map(|(k, v)| (v.name, k)).collect();
    }

    /// Objective value of a full assignment, constant included.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, c)| c * values[v]).sum::<f64>()
    }

    pub fn free_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary && v.lower < v.upper).count()
    }

    pub fn stats(&self) -> ModelStats {
        let mut vars = BTreeMap::new();
        for v in &self.variables {
            *vars.entry(v.name.family()).or_insert(0) += 1;
        }
        let mut rows = BTreeMap::new();
        for c in &self.constraints {
            *rows.entry(c.family).or_insert(0) += 1;
        }
        ModelStats {
            variables: self.variables.len(),
            constraints: self.constraints.len(),
            binaries: self.variables.iter().filter(|v| v.kind == VarKind::Binary).count(),
            free_binaries: self.free_binaries(),
            nonzeros: self.constraints.iter().map(|c| c.terms.len()).sum(),
            objective_nonzeros: self.objective.len(),
            vars_by_family: vars,
            rows_by_family: rows,
        }
    }
}

fn merge_duplicates(terms: &mut Vec<(VarId, f64)>) {
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for &(v, c) in terms.iter() {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    *terms = out;
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelStats {
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
    pub free_binaries: usize,
    /// Non-zero coefficients in the constraint matrix.
    pub nonzeros: usize,
    pub objective_nonzeros: usize,
    pub vars_by_family: BTreeMap<VarFamily, usize>,
    pub rows_by_family: BTreeMap<RowFamily, usize>,
}

impl ModelStats {
    pub fn vars(&self, family: VarFamily) -> usize {
        self.vars_by_family.get(&family).copied().unwrap_or(0)
    }

    pub fn rows(&self, family: RowFamily) -> usize {
        self.rows_by_family.get(&family).copied().unwrap_or(0)
    }
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "variables {} ({} binary, {} free binary), constraints {}, nonzeros {}",
            self.variables, self.binaries, self.free_binaries, self.constraints, self.nonzeros
        )?;
        for (fam, n) in &self.vars_by_family {
            writeln!(f, "  var {:<12} {n}", fam.prefix())?;
        }
        for (fam, n) in &self.rows_by_family {
            writeln!(f, "  row {:<12} {n}", fam.prefix())?;
        }
        Ok(())
    }
}
