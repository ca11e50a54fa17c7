//! A candidate plan in instance coordinates: dense tables of the decision
//! variables, filled from solver output by variable name.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{PlanningInstance, SiteKind};
use crate::names::{NameError, VarName};
use crate::scenario::ScenarioId;

/// Distance from 0 or 1 within which a binary value is rounded.
pub const BINARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error(transparent)]
    Name(#[from] NameError),
    #[error("`{name}` refers to an unknown {kind} {id}")]
    UnknownId { name: String, kind: &'static str, id: u64 },
    #[error("`{name}` has an index outside the instance")]
    OutOfRange { name: String },
    #[error("`{name}` is binary but has value {value}")]
    NotBinary { name: String, value: f64 },
    #[error("`{name}` has non-finite value {value}")]
    NotFinite { name: String, value: f64 },
}

/// Shape of every table of a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanShape {
    pub states: Vec<usize>,
    pub sites: usize,
    pub test_points: usize,
    pub years: usize,
    pub periods: usize,
}

impl PlanShape {
    pub fn of(inst: &PlanningInstance) -> Self {
        Self {
            states: inst.bs_types.iter().map(|t| t.states.len()).collect(),
            sites: inst.sites.len(),
            test_points: inst.test_points.len(),
            years: inst.years,
            periods: inst.periods(),
        }
    }

    pub fn types(&self) -> usize {
        self.states.len()
    }

    fn state_offset(&self, l: usize) -> usize {
        self.states[..l].iter().sum()
    }

    fn total_states(&self) -> usize {
        self.states.iter().sum()
    }
}

/// Where a plan came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub solver: String,
    pub scenario: Option<ScenarioId>,
}

/// Decision tables indexed by type, state, site index (existing sites first),
/// test point index, year and period. Years and periods are 1-based in the
/// accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSolution {
    pub shape: PlanShape,
    z: Vec<u8>,
    v: Vec<u8>,
    u: Vec<u8>,
    h: Vec<u8>,
    x: Vec<u8>,
    eb: Vec<f64>,
    loss: Vec<f64>,
    pub provenance: Provenance,
}

impl PlanSolution {
    /// The plan that installs nothing and assigns nothing.
    pub fn empty(shape: PlanShape) -> Self {
        let (ty, st, si, tp, y, p) =
            (shape.types(), shape.total_states(), shape.sites, shape.test_points, shape.years, shape.periods);
        Self {
            z: vec![0; ty * si * y],
            v: vec![0; st * si * y * p],
            u: vec![0; si * y * p],
            h: vec![0; tp * si * y * p],
            x: vec![0; st * si * y * p],
            eb: vec![0.0; si * y * p],
            loss: vec![0.0; si * y * p],
            shape,
            provenance: Provenance::default(),
        }
    }

    fn zi(&self, l: usize, j: usize, q: usize) -> usize {
        (l * self.shape.sites + j) * self.shape.years + (q - 1)
    }

    fn vi(&self, l: usize, s: usize, j: usize, q: usize, t: usize) -> usize {
        let ls = self.shape.state_offset(l) + s;
        ((ls * self.shape.sites + j) * self.shape.years + (q - 1)) * self.shape.periods + (t - 1)
    }

    fn ji(&self, j: usize, q: usize, t: usize) -> usize {
        (j * self.shape.years + (q - 1)) * self.shape.periods + (t - 1)
    }

    fn hi(&self, i: usize, j: usize, q: usize, t: usize) -> usize {
        ((i * self.shape.sites + j) * self.shape.years + (q - 1)) * self.shape.periods + (t - 1)
    }

    pub fn z(&self, l: usize, j: usize, q: usize) -> u8 {
        self.z[self.zi(l, j, q)]
    }
    pub fn v(&self, l: usize, s: usize, j: usize, q: usize, t: usize) -> u8 {
        self.v[self.vi(l, s, j, q, t)]
    }
    pub fn u(&self, j: usize, q: usize, t: usize) -> u8 {
        self.u[self.ji(j, q, t)]
    }
    pub fn h(&self, i: usize, j: usize, q: usize, t: usize) -> u8 {
        self.h[self.hi(i, j, q, t)]
    }
    pub fn x(&self, l: usize, s: usize, j: usize, q: usize, t: usize) -> u8 {
        self.x[self.vi(l, s, j, q, t)]
    }
    pub fn eb(&self, j: usize, q: usize, t: usize) -> f64 {
        self.eb[self.ji(j, q, t)]
    }
    pub fn loss(&self, j: usize, q: usize, t: usize) -> f64 {
        self.loss[self.ji(j, q, t)]
    }

    pub fn set_z(&mut self, l: usize, j: usize, q: usize, value: u8) {
        let k = self.zi(l, j, q);
        self.z[k] = value;
    }
    pub fn set_v(&mut self, l: usize, s: usize, j: usize, q: usize, t: usize, value: u8) {
        let k = self.vi(l, s, j, q, t);
        self.v[k] = value;
    }
    pub fn set_u(&mut self, j: usize, q: usize, t: usize, value: u8) {
        let k = self.ji(j, q, t);
        self.u[k] = value;
    }
    pub fn set_h(&mut self, i: usize, j: usize, q: usize, t: usize, value: u8) {
        let k = self.hi(i, j, q, t);
        self.h[k] = value;
    }
    pub fn set_x(&mut self, l: usize, s: usize, j: usize, q: usize, t: usize, value: u8) {
        let k = self.vi(l, s, j, q, t);
        self.x[k] = value;
    }
    pub fn set_eb(&mut self, j: usize, q: usize, t: usize, value: f64) {
        let k = self.ji(j, q, t);
        self.eb[k] = value;
    }
    pub fn set_loss(&mut self, j: usize, q: usize, t: usize, value: f64) {
        let k = self.ji(j, q, t);
        self.loss[k] = value;
    }

    /// `w_{l,j,q}`: whether a type-`l` station stands on site `j` in `year`.
    pub fn installed(&self, l: usize, j: usize, year: usize) -> u8 {
        (1..=year).map(|q| self.z(l, j, q)).sum()
    }

    /// Type standing on candidate site `j` in `year`, if any (the first one
    /// found when the plan is inconsistent).
    pub fn installed_type(&self, j: usize, year: usize) -> Option<usize> {
        (1..self.shape.types()).find(|&l| self.installed(l, j, year) > 0)
    }

    /// State in which the station on `j` runs in `(year, t)`, if any.
    pub fn running_state(&self, j: usize, year: usize, t: usize) -> Option<(usize, usize)> {
        (1..self.shape.types())
            .flat_map(|l| (0..self.shape.states[l]).map(move |s| (l, s)))
            .find(|&(l, s)| self.v(l, s, j, year, t) > 0)
    }

    /// Site serving test point `i` in `(year, t)`, if any.
    pub fn serving_site(&self, i: usize, year: usize, t: usize) -> Option<usize> {
        (0..self.shape.sites).find(|&j| self.h(i, j, year, t) > 0)
    }

    /// Fills a plan from `(name, value)` pairs. Binary values are rounded when
    /// within [`BINARY_TOLERANCE`] of 0 or 1; names absent from the input
    /// stay at zero.
    pub fn from_named_values<'a>(
        inst: &PlanningInstance,
        values: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Self, SolutionError> {
        let mut sol = Self::empty(PlanShape::of(inst));
        for (name, value) in values {
            let var: VarName = name.parse()?;
            if !value.is_finite() {
                return Err(SolutionError::NotFinite { name: name.into(), value });
            }
            let site = |j: u32| {
                inst.site_index(j).ok_or(SolutionError::UnknownId { name: name.into(), kind: "site", id: u64::from(j) })
            };
            let candidate = |j: u32| -> Result<usize, SolutionError> {
                let k = site(j)?;
                match inst.sites[k].kind {
                    SiteKind::Candidate => Ok(k),
                    SiteKind::Existing => Err(SolutionError::OutOfRange { name: name.into() }),
                }
            };
            let check = |ok: bool| if ok { Ok(()) } else { Err(SolutionError::OutOfRange { name: name.into() }) };
            let in_time = |q: usize, t: usize| check(q >= 1 && q <= inst.years && t >= 1 && t <= inst.periods());
            let state =
                |l: usize, s: usize| check(l >= 1 && l < inst.bs_types.len() && s < inst.bs_types[l].states.len());
            let bit = || round_binary(name, value);
            match var {
                VarName::Z { l, j, q } => {
                    let k = candidate(j)?;
                    check(l >= 1 && l < inst.bs_types.len())?;
                    in_time(q, 1)?;
                    sol.set_z(l, k, q, bit()?);
                }
                VarName::V { l, s, j, q, t } => {
                    let k = candidate(j)?;
                    state(l, s)?;
                    in_time(q, t)?;
                    sol.set_v(l, s, k, q, t, bit()?);
                }
                VarName::X { l, s, j, q, t } => {
                    let k = candidate(j)?;
                    state(l, s)?;
                    in_time(q, t)?;
                    sol.set_x(l, s, k, q, t, bit()?);
                }
                VarName::U { j, q, t } => {
                    let k = candidate(j)?;
                    in_time(q, t)?;
                    sol.set_u(k, q, t, bit()?);
                }
                VarName::H { i, j, q, t } => {
                    let tp = inst.test_point_index(i).ok_or(SolutionError::UnknownId {
                        name: name.into(),
                        kind: "test point",
                        id: u64::from(i),
                    })?;
                    let k = site(j)?;
                    in_time(q, t)?;
                    sol.set_h(tp, k, q, t, bit()?);
                }
                VarName::EB { j, q, t } => {
                    let k = candidate(j)?;
                    in_time(q, t)?;
                    sol.set_eb(k, q, t, value);
                }
                VarName::L { j, q, t } => {
                    let k = candidate(j)?;
                    in_time(q, t)?;
                    sol.set_loss(k, q, t, value);
                }
            }
        }
        Ok(sol)
    }

    /// All model variables of the plan with their values, in name order.
    pub fn to_named_values(&self, inst: &PlanningInstance) -> BTreeMap<VarName, f64> {
        let mut out = BTreeMap::new();
        let n_exist = inst.n_existing();
        let sh = &self.shape;
        for j in n_exist..sh.sites {
            let jid = inst.sites[j].id;
            for q in 1..=sh.years {
                for l in 1..sh.types() {
                    out.insert(VarName::Z { l, j: jid, q }, f64::from(self.z(l, j, q)));
                }
                for t in 1..=sh.periods {
                    for l in 1..sh.types() {
                        for s in 0..sh.states[l] {
                            out.insert(VarName::V { l, s, j: jid, q, t }, f64::from(self.v(l, s, j, q, t)));
                            out.insert(VarName::X { l, s, j: jid, q, t }, f64::from(self.x(l, s, j, q, t)));
                        }
                    }
                    out.insert(VarName::U { j: jid, q, t }, f64::from(self.u(j, q, t)));
                    out.insert(VarName::EB { j: jid, q, t }, self.eb(j, q, t));
                    out.insert(VarName::L { j: jid, q, t }, self.loss(j, q, t));
                }
            }
        }
        for (i, tp) in inst.test_points.iter().enumerate() {
            for (j, site) in inst.sites.iter().enumerate() {
                for q in 1..=sh.years {
                    for t in 1..=sh.periods {
                        out.insert(VarName::H { i: tp.id, j: site.id, q, t }, f64::from(self.h(i, j, q, t)));
                    }
                }
            }
        }
        out
    }
}

fn round_binary(name: &str, value: f64) -> Result<u8, SolutionError> {
    if value.abs() <= BINARY_TOLERANCE {
        Ok(0)
    } else if (value - 1.0).abs() <= BINARY_TOLERANCE {
        Ok(1)
    } else {
        Err(SolutionError::NotBinary { name: name.into(), value })
    }
}
