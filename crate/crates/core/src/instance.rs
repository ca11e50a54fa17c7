//! Planning instance: sites, test points, station types, horizon, daily
//! profiles and economic parameters, plus the schedules derived from them.
//!
//! Instances are stored as TOML documents (see [`crate::schema`]). Loading
//! resolves conveniences (rate growth, linear tax schedule) into explicit
//! per-year values and validates every invariant, so a loaded
//! [`PlanningInstance`] can be shared read-only across scenario runs.

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

use crate::economics;
use crate::radio::{self, Link, RadioError};
use crate::schema;
use crate::units::HOURS_PER_DAY;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read instance file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("instance does not match schema: {0}")]
    Schema(String),
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("{kind} index {index} out of range")]
    OutOfRange { kind: &'static str, index: usize },
    #[error("type {0} is the legacy type and is never installed")]
    LegacyType(usize),
    #[error("type {0} has no solar equipment")]
    NotSolar(usize),
    #[error("year {year} precedes installation year {install_year}")]
    BeforeInstall { year: usize, install_year: usize },
    #[error(transparent)]
    Radio(#[from] RadioError),
}

pub(crate) fn field_err(field: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Existing,
    Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: u32,
    pub kind: SiteKind,
    pub position: (f64, f64),
    /// Station types that may be installed here (the `M` matrix row).
    /// Empty for existing sites, which always carry type 0.
    pub allowed_types: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPoint {
    pub id: u32,
    pub position: (f64, f64),
    /// First year (1-based) in which the point generates traffic;
    /// `years + 1` means never.
    pub activation_year: usize,
    /// Peak-period rate per year in Mbps.
    pub peak_rate_by_year: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerState {
    /// Total electrical power drawn in this state (W).
    pub total_w: f64,
    /// Radiated transmit power (W).
    pub transmit_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolarEquipment {
    /// $/W of panel rating, one value per year (a single value applies to all years).
    pub unit_cost_per_w: Vec<f64>,
    pub panel_rating_w: f64,
    /// Panel area times conversion efficiency (m²).
    pub panel_area_eff_m2: f64,
    pub battery_capacity_kwh: f64,
    pub battery_min_fraction: f64,
    pub battery_aging_rate: f64,
    pub panel_aging_rate: f64,
    pub battery_lifetime_years: usize,
    /// Price of one replacement battery bank ($, year-1 money).
    pub battery_cost: f64,
}

impl SolarEquipment {
    pub fn unit_cost(&self, year: usize) -> f64 {
        match self.unit_cost_per_w.len() {
            1 => self.unit_cost_per_w[0],
            _ => self.unit_cost_per_w[year - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsTypeSpec {
    pub id: usize,
    pub name: String,
    /// Power states sorted by transmit power; state 0 is idle for zooming types.
    pub states: Vec<PowerState>,
    pub bandwidth_mhz: f64,
    /// Construction and installation cost ($, year-1 money).
    pub build_cost: f64,
    pub solar: Option<SolarEquipment>,
}

impl BsTypeSpec {
    pub fn is_solar(&self) -> bool {
        self.solar.is_some()
    }

    pub fn max_state(&self) -> usize {
        self.states.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSource {
    pub name: String,
    /// kg CO2-eq per kWh; one value per year or a single value for all years.
    pub kg_per_kwh: Vec<f64>,
    /// Share of grid energy coming from this source.
    pub share: f64,
}

impl EmissionSource {
    pub fn factor(&self, year: usize) -> f64 {
        match self.kg_per_kwh.len() {
            1 => self.kg_per_kwh[0],
            _ => self.kg_per_kwh[year - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Economics {
    pub discount_rate: f64,
    pub inflation_rate: f64,
    /// Year-1 grid price in $/kWh.
    pub grid_tariff_kwh: f64,
    /// Optional per-period multipliers of the grid price (time-of-use).
    pub tariff_period_multipliers: Vec<f64>,
    pub emission_sources: Vec<EmissionSource>,
    /// Carbon tax in $/ton CO2-eq, one value per year.
    pub carbon_tax: Vec<f64>,
    pub installs_per_year: f64,
    pub days_per_install_period: f64,
}

impl Economics {
    /// Days of operation represented by one simulated day (`m * phi`).
    pub fn days_per_year(&self) -> f64 {
        self.installs_per_year * self.days_per_install_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub antenna_gain: f64,
    pub path_loss_exponent: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningInstance {
    pub name: String,
    /// Existing sites first, then candidate sites, each in file order.
    pub sites: Vec<Site>,
    pub test_points: Vec<TestPoint>,
    pub bs_types: Vec<BsTypeSpec>,
    pub years: usize,
    /// Period lengths in hours; they sum to 24.
    pub period_hours: Vec<f64>,
    /// Fraction of the peak rate demanded in each period.
    pub traffic_profile: Vec<f64>,
    /// Solar irradiance in W/m² in each period.
    pub illumination_w_m2: Vec<f64>,
    pub radio: RadioParams,
    pub economics: Economics,
}

impl PlanningInstance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, InstanceError> {
        let file: schema::InstanceFile = toml::from_str(text).map_err(|e| InstanceError::Schema(e.to_string()))?;
        let instance = file.resolve()?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&schema::InstanceFile::from_instance(self)).expect("instance serializes to TOML")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml())
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })
    }

    pub fn periods(&self) -> usize {
        self.period_hours.len()
    }

    pub fn n_existing(&self) -> usize {
        self.sites.iter().filter(|s| s.kind == SiteKind::Existing).count()
    }

    pub fn existing_sites(&self) -> &[Site] {
        &self.sites[..self.n_existing()]
    }

    pub fn candidate_sites(&self) -> &[Site] {
        &self.sites[self.n_existing()..]
    }

    /// Station types other than the legacy type 0.
    pub fn new_types(&self) -> impl Iterator<Item = &BsTypeSpec> {
        self.bs_types.iter().skip(1)
    }

    pub fn link(&self) -> Link<f64> {
        Link {
            antenna_gain: self.radio.antenna_gain,
            path_loss_exponent: self.radio.path_loss_exponent,
            noise_w: self.radio.noise_w,
        }
    }

    /// `M_{l,j}` for a site index.
    pub fn allowed(&self, l: usize, site: usize) -> bool {
        let s = &self.sites[site];
        match s.kind {
            SiteKind::Existing => l == 0,
            SiteKind::Candidate => s.allowed_types.contains(&l),
        }
    }

    pub fn distance(&self, tp: usize, site: usize) -> f64 {
        radio::distance(self.test_points[tp].position, self.sites[site].position)
    }

    /// `nu_{i,q}`: whether test point `tp` generates traffic in `year`.
    pub fn activation_indicator(&self, tp: usize, year: usize) -> Result<bool, InstanceError> {
        let point = self.test_points.get(tp).ok_or(InstanceError::OutOfRange { kind: "test point", index: tp })?;
        if year == 0 || year > self.years {
            return Err(InstanceError::OutOfRange { kind: "year", index: year });
        }
        Ok(year >= point.activation_year)
    }

    /// Rate in Mbps requested by `tp` during period `t` of `year` (both 1-based).
    pub fn rate(&self, tp: usize, year: usize, t: usize) -> f64 {
        let point = &self.test_points[tp];
        if year < point.activation_year {
            return 0.0;
        }
        point.peak_rate_by_year[year - 1] * self.traffic_profile[t - 1]
    }

    pub fn discount_factor(&self, year: usize) -> Result<f64, InstanceError> {
        if year == 0 || year > self.years {
            return Err(InstanceError::OutOfRange { kind: "year", index: year });
        }
        Ok(economics::discount_factor(self.economics.discount_rate, year))
    }

    pub fn inflation_factor(&self, year: usize) -> f64 {
        economics::inflation_factor(self.economics.inflation_rate, year)
    }

    /// Nominal grid price in $/kWh at a site in period `t` of `year`.
    pub fn grid_tariff(&self, _site: usize, year: usize, t: usize) -> f64 {
        let mult = self.economics.tariff_period_multipliers.get(t - 1).copied().unwrap_or(1.0);
        self.economics.grid_tariff_kwh * mult * self.inflation_factor(year)
    }

    /// Grid-mix emission factor in kg/kWh for `year`.
    pub fn emission_factor(&self, year: usize) -> f64 {
        self.economics.emission_sources.iter().map(|s| s.share * s.factor(year)).sum()
    }

    pub fn carbon_tax(&self, year: usize) -> f64 {
        self.economics.carbon_tax[year - 1]
    }

    /// Solar part of the installation cost: panels and first battery bank at
    /// the year's unit price plus the present value of later battery swaps.
    pub fn solar_capex(&self, l: usize, year: usize) -> f64 {
        let Some(solar) = &self.bs_types[l].solar else {
            return 0.0;
        };
        let panels = solar.unit_cost(year) * solar.panel_rating_w * self.inflation_factor(year);
        let swaps = economics::replacement_cost_at_install(
            solar.battery_cost,
            year,
            solar.battery_lifetime_years,
            self.years,
            self.economics.discount_rate,
            self.economics.inflation_rate,
        );
        panels + swaps
    }

    /// `C_{l,q}`: nominal cost of installing a station of type `l` in `year`.
    pub fn installation_cost(&self, l: usize, year: usize) -> Result<f64, InstanceError> {
        if l == 0 {
            return Err(InstanceError::LegacyType(0));
        }
        if l >= self.bs_types.len() {
            return Err(InstanceError::OutOfRange { kind: "type", index: l });
        }
        if year == 0 || year > self.years {
            return Err(InstanceError::OutOfRange { kind: "year", index: year });
        }
        Ok(self.bs_types[l].build_cost * self.inflation_factor(year) + self.solar_capex(l, year))
    }

    pub fn site_index(&self, id: u32) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    pub fn test_point_index(&self, id: u32) -> Option<usize> {
        self.test_points.iter().position(|p| p.id == id)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let years = self.years;
        let periods = self.periods();
        if years == 0 {
            return Err(field_err("horizon.years", "must be at least 1"));
        }
        if periods == 0 {
            return Err(field_err("horizon.period_hours", "at least one period required"));
        }
        if self.period_hours.iter().any(|&h| !(h > 0.0)) {
            return Err(InstanceError::Invariant("period lengths must be positive".into()));
        }
        let total: f64 = self.period_hours.iter().sum();
        if (total - HOURS_PER_DAY).abs() > 1e-9 {
            return Err(InstanceError::Invariant(format!("periods must cover 24 hours (they sum to {total} h)")));
        }
        check_len("profiles.traffic", self.traffic_profile.len(), periods)?;
        check_len("profiles.illumination_w_m2", self.illumination_w_m2.len(), periods)?;
        check_nonneg("profiles.traffic", &self.traffic_profile)?;
        check_nonneg("profiles.illumination_w_m2", &self.illumination_w_m2)?;

        let mut ids = HashSet::new();
        let mut seen_candidate = false;
        for site in &self.sites {
            if !ids.insert(site.id) {
                return Err(InstanceError::DuplicateId { kind: "site", id: site.id });
            }
            match site.kind {
                SiteKind::Existing if seen_candidate => {
                    return Err(InstanceError::Invariant("existing sites must precede candidates".into()))
                }
                SiteKind::Existing if !site.allowed_types.is_empty() => {
                    return Err(field_err(
                        format!("sites[{}].allowed_types", site.id),
                        "existing sites carry type 0 and take no allowed types",
                    ))
                }
                SiteKind::Candidate => seen_candidate = true,
                _ => {}
            }
            for &l in &site.allowed_types {
                if l == 0 {
                    return Err(InstanceError::Invariant(format!(
                        "M[0,{}] must be 0: the legacy type cannot be installed on candidate sites",
                        site.id
                    )));
                }
                if l >= self.bs_types.len() {
                    return Err(field_err(format!("sites[{}].allowed_types", site.id), format!("unknown type {l}")));
                }
            }
        }

        let mut tp_ids = HashSet::new();
        for tp in &self.test_points {
            if !tp_ids.insert(tp.id) {
                return Err(InstanceError::DuplicateId { kind: "test point", id: tp.id });
            }
            if tp.activation_year < 1 || tp.activation_year > years + 1 {
                return Err(InstanceError::Invariant(format!(
                    "test point {} activation year {} outside 1..={}",
                    tp.id,
                    tp.activation_year,
                    years + 1
                )));
            }
            check_len(&format!("test_points[{}].peak_rate_by_year", tp.id), tp.peak_rate_by_year.len(), years)?;
            check_nonneg(&format!("test_points[{}].peak_rate_by_year", tp.id), &tp.peak_rate_by_year)?;
        }

        if self.bs_types.is_empty() {
            return Err(field_err("bs_types", "type 0 (legacy) is required"));
        }
        for (l, ty) in self.bs_types.iter().enumerate() {
            if ty.id != l {
                return Err(field_err(format!("bs_types[{l}].id"), "type ids must be 0, 1, 2, ... in order"));
            }
            if ty.states.is_empty() {
                return Err(field_err(format!("bs_types[{l}].states"), "at least one state required"));
            }
            for st in &ty.states {
                if !(st.transmit_w >= 0.0 && st.total_w >= st.transmit_w) {
                    return Err(InstanceError::Invariant(format!(
                        "type {l}: state power must satisfy total >= transmit >= 0"
                    )));
                }
            }
            if ty.states.windows(2).any(|w| w[1].transmit_w < w[0].transmit_w) {
                return Err(InstanceError::Invariant(format!("type {l}: states must be sorted by transmit power")));
            }
            if !(ty.bandwidth_mhz > 0.0) {
                return Err(field_err(format!("bs_types[{l}].bandwidth_mhz"), "must be positive"));
            }
            if ty.build_cost < 0.0 {
                return Err(field_err(format!("bs_types[{l}].build_cost"), "must be non-negative"));
            }
            if let Some(solar) = &ty.solar {
                if l == 0 {
                    return Err(InstanceError::Invariant("U_0 = 0: the legacy type has no solar equipment".into()));
                }
                validate_solar(l, solar, years)?;
            }
        }
        if self.bs_types[0].states.len() != 1 {
            return Err(InstanceError::Invariant("legacy type 0 must have exactly one state".into()));
        }

        Link::new(self.radio.antenna_gain, self.radio.path_loss_exponent, self.radio.noise_w)?;
        if !(self.radio.antenna_gain > 0.0) {
            return Err(field_err("radio.antenna_gain", "must be positive"));
        }

        let e = &self.economics;
        if !(e.discount_rate > -1.0) || !(e.inflation_rate > -1.0) {
            return Err(field_err("economics", "rates must exceed -1"));
        }
        if !(e.grid_tariff_kwh >= 0.0) {
            return Err(field_err("economics.grid_tariff_kwh", "must be non-negative"));
        }
        if !e.tariff_period_multipliers.is_empty() {
            check_len("economics.tariff_period_multipliers", e.tariff_period_multipliers.len(), periods)?;
            check_nonneg("economics.tariff_period_multipliers", &e.tariff_period_multipliers)?;
        }
        check_len("economics.carbon_tax", e.carbon_tax.len(), years)?;
        check_nonneg("economics.carbon_tax", &e.carbon_tax)?;
        if e.emission_sources.is_empty() {
            return Err(field_err("economics.emission_sources", "at least one source required"));
        }
        for src in &e.emission_sources {
            let field = format!("economics.emission_sources[{}]", src.name);
            if src.kg_per_kwh.len() != 1 {
                check_len(&field, src.kg_per_kwh.len(), years)?;
            }
            check_nonneg(&field, &src.kg_per_kwh)?;
            if !(src.share >= 0.0) {
                return Err(field_err(field, "share must be non-negative"));
            }
        }
        if !(e.installs_per_year > 0.0) || !(e.days_per_install_period > 0.0) {
            return Err(field_err("economics", "installs_per_year and days_per_install_period must be positive"));
        }
        Ok(())
    }
}

fn validate_solar(l: usize, s: &SolarEquipment, years: usize) -> Result<(), InstanceError> {
    let f = |name: &str| format!("bs_types[{l}].solar.{name}");
    if s.unit_cost_per_w.len() != 1 {
        check_len(&f("unit_cost_per_w"), s.unit_cost_per_w.len(), years)?;
    }
    check_nonneg(&f("unit_cost_per_w"), &s.unit_cost_per_w)?;
    for (name, v) in [
        ("panel_rating_w", s.panel_rating_w),
        ("panel_area_eff_m2", s.panel_area_eff_m2),
        ("battery_capacity_kwh", s.battery_capacity_kwh),
        ("battery_cost", s.battery_cost),
    ] {
        if !(v >= 0.0) {
            return Err(field_err(f(name), "must be non-negative"));
        }
    }
    for (name, v) in [
        ("battery_min_fraction", s.battery_min_fraction),
        ("battery_aging_rate", s.battery_aging_rate),
        ("panel_aging_rate", s.panel_aging_rate),
    ] {
        if !(0.0..1.0).contains(&v) {
            return Err(InstanceError::Invariant(format!("{} must lie in [0, 1)", f(name))));
        }
    }
    if s.battery_lifetime_years == 0 {
        return Err(field_err(f("battery_lifetime_years"), "must be at least 1"));
    }
    Ok(())
}

fn check_len(field: &str, got: usize, want: usize) -> Result<(), InstanceError> {
    if got != want {
        return Err(field_err(field, format!("expected {want} values, got {got}")));
    }
    Ok(())
}

fn check_nonneg(field: &str, values: &[f64]) -> Result<(), InstanceError> {
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(field_err(field, "values must be non-negative"));
    }
    Ok(())
}

/// Peak rates growing geometrically from `initial` at `growth` per year.
pub fn growth_schedule(initial: f64, growth: f64, years: usize) -> Vec<f64> {
    (0..years).map(|k| initial * (1.0 + growth).powi(k as i32)).collect()
}
