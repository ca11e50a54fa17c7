//! Demand and coverage tables derived from an instance: which test points a
//! station can reach in each power state, the energy a station spends
//! serving each test point, and the solar production and storage windows of
//! solar-capable types by installation year.

use std::fmt::Write as _;

use crate::economics::{battery_age, battery_window, panel_yield_kwh};
use crate::instance::{InstanceError, PlanningInstance, SiteKind};
use crate::units::WH_PER_KWH;

/// Transmit power a station must spend on a test point, at the rate the
/// point requests in `(year, t)`, with channel bandwidth `bandwidth_mhz`.
fn required_power(
    inst: &PlanningInstance,
    tp: usize,
    site: usize,
    bandwidth_mhz: f64,
    year: usize,
    t: usize,
) -> Result<f64, InstanceError> {
    let rate = inst.rate(tp, year, t);
    Ok(inst.link().required_transmit_power(rate, bandwidth_mhz, inst.distance(tp, site))?)
}

pub fn channel_gain(inst: &PlanningInstance, tp: usize, site: usize) -> Result<f64, InstanceError> {
    check_tp_site(inst, tp, site)?;
    Ok(inst.link().gain(inst.distance(tp, site))?)
}

/// Highest rate (Mbps) test point `tp` can receive from a type-`l` station on
/// `site` transmitting in state `s`.
pub fn max_bitrate(inst: &PlanningInstance, tp: usize, site: usize, l: usize, s: usize) -> Result<f64, InstanceError> {
    check_tp_site(inst, tp, site)?;
    let ty = inst.bs_types.get(l).ok_or(InstanceError::OutOfRange { kind: "type", index: l })?;
    let state = ty.states.get(s).ok_or(InstanceError::OutOfRange { kind: "state", index: s })?;
    Ok(inst.link().max_bitrate(ty.bandwidth_mhz, state.transmit_w, inst.distance(tp, site))?)
}

/// `k_{i,j,l,s,q,t}`.
pub fn coverage_indicator(
    inst: &PlanningInstance,
    tp: usize,
    site: usize,
    l: usize,
    s: usize,
    year: usize,
    t: usize,
) -> Result<bool, InstanceError> {
    check_year_period(inst, year, t)?;
    let capacity = max_bitrate(inst, tp, site, l, s)?;
    Ok(inst.rate(tp, year, t) <= capacity)
}

/// Bandwidth used to price demand on a site in the MILP: the legacy type's on
/// existing sites, the narrowest allowed type's on candidate sites.
pub fn model_bandwidth(inst: &PlanningInstance, site: usize) -> f64 {
    let s = &inst.sites[site];
    match s.kind {
        SiteKind::Existing => inst.bs_types[0].bandwidth_mhz,
        SiteKind::Candidate => s
            .allowed_types
            .iter()
            .map(|&l| inst.bs_types[l].bandwidth_mhz)
            .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.min(b))))
            .unwrap_or(inst.bs_types[0].bandwidth_mhz),
    }
}

/// `E^T_{i,j,q,t}` in kWh at the site's model bandwidth.
pub fn demand_energy(
    inst: &PlanningInstance,
    tp: usize,
    site: usize,
    year: usize,
    t: usize,
) -> Result<f64, InstanceError> {
    check_tp_site(inst, tp, site)?;
    check_year_period(inst, year, t)?;
    demand_energy_at(inst, tp, site, model_bandwidth(inst, site), year, t)
}

/// Energy in kWh a type-`l` station on `site` spends serving `tp`.
pub fn demand_energy_for_type(
    inst: &PlanningInstance,
    tp: usize,
    site: usize,
    l: usize,
    year: usize,
    t: usize,
) -> Result<f64, InstanceError> {
    check_tp_site(inst, tp, site)?;
    check_year_period(inst, year, t)?;
    let ty = inst.bs_types.get(l).ok_or(InstanceError::OutOfRange { kind: "type", index: l })?;
    demand_energy_at(inst, tp, site, ty.bandwidth_mhz, year, t)
}

fn demand_energy_at(
    inst: &PlanningInstance,
    tp: usize,
    site: usize,
    bandwidth_mhz: f64,
    year: usize,
    t: usize,
) -> Result<f64, InstanceError> {
    let watts = required_power(inst, tp, site, bandwidth_mhz, year, t)?;
    Ok(watts * inst.period_hours[t - 1] / WH_PER_KWH)
}

/// `e^S_{l,q',q,t}` in kWh.
pub fn solar_yield(
    inst: &PlanningInstance,
    l: usize,
    install_year: usize,
    year: usize,
    t: usize,
) -> Result<f64, InstanceError> {
    check_year_period(inst, year, t)?;
    let ty = inst.bs_types.get(l).ok_or(InstanceError::OutOfRange { kind: "type", index: l })?;
    if year < install_year {
        return Err(InstanceError::BeforeInstall { year, install_year });
    }
    let Some(solar) = &ty.solar else {
        return Ok(0.0);
    };
    Ok(panel_yield_kwh(
        solar.panel_area_eff_m2,
        inst.illumination_w_m2[t - 1],
        inst.period_hours[t - 1],
        solar.panel_aging_rate,
        year - install_year,
    ))
}

/// `(B^-, B^+)` in kWh for the battery bank in service during `year`.
pub fn battery_bounds(
    inst: &PlanningInstance,
    l: usize,
    install_year: usize,
    year: usize,
) -> Result<(f64, f64), InstanceError> {
    let ty = inst.bs_types.get(l).ok_or(InstanceError::OutOfRange { kind: "type", index: l })?;
    let solar = ty.solar.as_ref().ok_or(InstanceError::NotSolar(l))?;
    if year < install_year {
        return Err(InstanceError::BeforeInstall { year, install_year });
    }
    let age = battery_age(install_year, year, solar.battery_lifetime_years);
    Ok(battery_window(solar.battery_capacity_kwh, solar.battery_min_fraction, solar.battery_aging_rate, age))
}

fn check_tp_site(inst: &PlanningInstance, tp: usize, site: usize) -> Result<(), InstanceError> {
    if tp >= inst.test_points.len() {
        return Err(InstanceError::OutOfRange { kind: "test point", index: tp });
    }
    if site >= inst.sites.len() {
        return Err(InstanceError::OutOfRange { kind: "site", index: site });
    }
    Ok(())
}

fn check_year_period(inst: &PlanningInstance, year: usize, t: usize) -> Result<(), InstanceError> {
    if year == 0 || year > inst.years {
        return Err(InstanceError::OutOfRange { kind: "year", index: year });
    }
    if t == 0 || t > inst.periods() {
        return Err(InstanceError::OutOfRange { kind: "period", index: t });
    }
    Ok(())
}

/// Shape shared by all tables of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableDims {
    pub test_points: usize,
    pub sites: usize,
    pub types: usize,
    pub years: usize,
    pub periods: usize,
}

impl TableDims {
    pub fn of(inst: &PlanningInstance) -> Self {
        Self {
            test_points: inst.test_points.len(),
            sites: inst.sites.len(),
            types: inst.bs_types.len(),
            years: inst.years,
            periods: inst.periods(),
        }
    }
}

/// Dense `k_{i,j,l,s,q,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTable {
    pub dims: TableDims,
    /// Offset of each type's first state in the flattened `(l, s)` axis.
    state_offset: Vec<usize>,
    n_states: usize,
    covered: Vec<bool>,
}

impl CoverageTable {
    pub fn build(inst: &PlanningInstance) -> Result<Self, InstanceError> {
        let dims = TableDims::of(inst);
        let mut state_offset = Vec::with_capacity(dims.types);
        let mut n_states = 0;
        for ty in &inst.bs_types {
            state_offset.push(n_states);
            n_states += ty.states.len();
        }
        let mut covered = vec![false; dims.test_points * dims.sites * n_states * dims.years * dims.periods];
        let mut table = Self { dims, state_offset, n_states, covered: Vec::new() };
        for i in 0..dims.test_points {
            for j in 0..dims.sites {
                for (l, ty) in inst.bs_types.iter().enumerate() {
                    for s in 0..ty.states.len() {
                        let capacity = max_bitrate(inst, i, j, l, s)?;
                        for q in 1..=dims.years {
                            for t in 1..=dims.periods {
                                covered[table.offset(i, j, l, s, q, t)] = inst.rate(i, q, t) <= capacity;
                            }
                        }
                    }
                }
            }
        }
        table.covered = covered;
        Ok(table)
    }

    fn offset(&self, i: usize, j: usize, l: usize, s: usize, q: usize, t: usize) -> usize {
        let d = &self.dims;
        let ls = self.state_offset[l] + s;
        ((((i * d.sites + j) * self.n_states + ls) * d.years + (q - 1)) * d.periods) + (t - 1)
    }

    /// `k` for 0-based test point/site/type/state and 1-based year/period.
    pub fn get(&self, i: usize, j: usize, l: usize, s: usize, q: usize, t: usize) -> bool {
        self.covered[self.offset(i, j, l, s, q, t)]
    }

    pub fn states_of(&self, l: usize) -> usize {
        let end = self.state_offset.get(l + 1).copied().unwrap_or(self.n_states);
        end - self.state_offset[l]
    }

    pub fn count_covered(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    /// `tp,site,type,state,year,period` rows for every covered entry.
    pub fn to_delimited(&self, inst: &PlanningInstance) -> String {
        let mut out = String::from("test_point,site,type,state,year,period\n");
        for i in 0..self.dims.test_points {
            for j in 0..self.dims.sites {
                for l in 0..self.dims.types {
                    for s in 0..self.states_of(l) {
                        for q in 1..=self.dims.years {
                            for t in 1..=self.dims.periods {
                                if self.get(i, j, l, s, q, t) {
                                    let _ = writeln!(
                                        out,
                                        "{},{},{l},{s},{q},{t}",
                                        inst.test_points[i].id, inst.sites[j].id
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// `E^T_{i,j,q,t}` (kWh) at model bandwidth and `rho_{i,q,t}` (Mbps).
#[derive(Debug, Clone, PartialEq)]
pub struct DemandTable {
    pub dims: TableDims,
    energy_kwh: Vec<f64>,
    rate_mbps: Vec<f64>,
}

impl DemandTable {
    pub fn build(inst: &PlanningInstance) -> Result<Self, InstanceError> {
        let dims = TableDims::of(inst);
        let mut energy_kwh = Vec::with_capacity(dims.test_points * dims.sites * dims.years * dims.periods);
        for i in 0..dims.test_points {
            for j in 0..dims.sites {
                let bw = model_bandwidth(inst, j);
                for q in 1..=dims.years {
                    for t in 1..=dims.periods {
                        energy_kwh.push(demand_energy_at(inst, i, j, bw, q, t)?);
                    }
                }
            }
        }
        let mut rate_mbps = Vec::with_capacity(dims.test_points * dims.years * dims.periods);
        for i in 0..dims.test_points {
            for q in 1..=dims.years {
                for t in 1..=dims.periods {
                    rate_mbps.push(inst.rate(i, q, t));
                }
            }
        }
        Ok(Self { dims, energy_kwh, rate_mbps })
    }

    pub fn energy(&self, i: usize, j: usize, q: usize, t: usize) -> f64 {
        let d = &self.dims;
        self.energy_kwh[((i * d.sites + j) * d.years + (q - 1)) * d.periods + (t - 1)]
    }

    pub fn rate(&self, i: usize, q: usize, t: usize) -> f64 {
        let d = &self.dims;
        self.rate_mbps[(i * d.years + (q - 1)) * d.periods + (t - 1)]
    }

    /// `test_point,site,year,period,energy_kwh,rate_mbps` for non-zero demand.
    pub fn to_delimited(&self, inst: &PlanningInstance) -> String {
        let mut out = String::from("test_point,site,year,period,energy_kwh,rate_mbps\n");
        for i in 0..self.dims.test_points {
            for j in 0..self.dims.sites {
                for q in 1..=self.dims.years {
                    for t in 1..=self.dims.periods {
                        let e = self.energy(i, j, q, t);
                        if e > 0.0 {
                            let _ = writeln!(
                                out,
                                "{},{},{q},{t},{e},{}",
                                inst.test_points[i].id,
                                inst.sites[j].id,
                                self.rate(i, q, t)
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// Solar production `e^S_{l,q',q,t}` and storage windows `B^±_{l,q',q}` by
/// installation year `q'`; zero for `q < q'` and for non-solar types.
#[derive(Debug, Clone, PartialEq)]
pub struct SolarSchedule {
    pub dims: TableDims,
    yield_kwh: Vec<f64>,
    lower_kwh: Vec<f64>,
    upper_kwh: Vec<f64>,
}

impl SolarSchedule {
    pub fn build(inst: &PlanningInstance) -> Result<Self, InstanceError> {
        let dims = TableDims::of(inst);
        let (n, y, p) = (dims.types, dims.years, dims.periods);
        let mut yield_kwh = vec![0.0; n * y * y * p];
        let mut lower_kwh = vec![0.0; n * y * y];
        let mut upper_kwh = vec![0.0; n * y * y];
        let mut sched = Self { dims, yield_kwh: Vec::new(), lower_kwh: Vec::new(), upper_kwh: Vec::new() };
        for (l, ty) in inst.bs_types.iter().enumerate() {
            if !ty.is_solar() {
                continue;
            }
            for qi in 1..=y {
                for q in qi..=y {
                    let (lo, hi) = battery_bounds(inst, l, qi, q)?;
                    let k = sched.window_offset(l, qi, q);
                    lower_kwh[k] = lo;
                    upper_kwh[k] = hi;
                    for t in 1..=p {
                        yield_kwh[k * p + (t - 1)] = solar_yield(inst, l, qi, q, t)?;
                    }
                }
            }
        }
        sched.yield_kwh = yield_kwh;
        sched.lower_kwh = lower_kwh;
        sched.upper_kwh = upper_kwh;
        Ok(sched)
    }

    fn window_offset(&self, l: usize, install_year: usize, year: usize) -> usize {
        (l * self.dims.years + (install_year - 1)) * self.dims.years + (year - 1)
    }

    pub fn yield_kwh(&self, l: usize, install_year: usize, year: usize, t: usize) -> f64 {
        self.yield_kwh[self.window_offset(l, install_year, year) * self.dims.periods + (t - 1)]
    }

    pub fn lower(&self, l: usize, install_year: usize, year: usize) -> f64 {
        self.lower_kwh[self.window_offset(l, install_year, year)]
    }

    pub fn upper(&self, l: usize, install_year: usize, year: usize) -> f64 {
        self.upper_kwh[self.window_offset(l, install_year, year)]
    }
}

/// The three tables the model builder and the validator consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTables {
    pub coverage: CoverageTable,
    pub demand: DemandTable,
    pub solar: SolarSchedule,
}

impl ModelTables {
    pub fn build(inst: &PlanningInstance) -> Result<Self, InstanceError> {
        Ok(Self {
            coverage: CoverageTable::build(inst)?,
            demand: DemandTable::build(inst)?,
            solar: SolarSchedule::build(inst)?,
        })
    }
}
