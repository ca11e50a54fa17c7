//! On-disk TOML layout of a planning instance (`schema = 1`).
//!
//! ```toml
//! schema = 1
//! name = "micro1"
//!
//! [horizon]
//! years = 3
//! period_hours = [6.0, 6.0, 6.0, 6.0]
//!
//! [profiles]
//! traffic = [0.2, 1.0, 0.8, 0.4]
//! illumination_w_m2 = [0.0, 680.0, 800.0, 0.0]
//!
//! [radio]
//! antenna_gain = 3.0
//! path_loss_exponent = 3.0
//! noise_w = 1e-5
//!
//! [economics]
//! discount_rate = 0.12
//! inflation_rate = 0.0264
//! grid_tariff_kwh = 0.2
//! carbon_tax = { start = 0.0, step = 0.0 }
//!
//! [[sites]]
//! id = 1
//! kind = "existing"
//! position = [0.0, 0.0]
//!
//! [[sites]]
//! id = 2
//! kind = "candidate"
//! position = [150.0, 0.0]
//! allowed_types = [1, 2]
//!
//! [[test_points]]
//! id = 1
//! position = [120.0, 10.0]
//! activation_year = 1
//! initial_rate = 10.0     # or peak_rate_by_year = [...]
//! growth_rate = 0.2
//!
//! [[bs_types]]
//! id = 0
//! name = "macro"
//! states = [{ total_w = 1350.0, transmit_w = 40.0 }]
//! ```
//!
//! Solar-capable types add a `[bs_types.solar]` table. Missing optional
//! values take the defaults documented on the fields below.

use serde::{Deserialize, Serialize};

use crate::economics::default_tax_schedule;
use crate::instance::{
    field_err, growth_schedule, BsTypeSpec, Economics, EmissionSource, InstanceError, PlanningInstance, PowerState,
    RadioParams, Site, SiteKind, SolarEquipment, TestPoint,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    pub horizon: HorizonFile,
    pub profiles: ProfilesFile,
    pub radio: RadioFile,
    pub economics: EconomicsFile,
    pub sites: Vec<SiteFile>,
    pub test_points: Vec<TestPointFile>,
    pub bs_types: Vec<BsTypeFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonFile {
    pub years: usize,
    pub period_hours: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesFile {
    pub traffic: Vec<f64>,
    pub illumination_w_m2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioFile {
    pub antenna_gain: f64,
    pub path_loss_exponent: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsFile {
    pub discount_rate: f64,
    pub inflation_rate: f64,
    pub grid_tariff_kwh: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tariff_period_multipliers: Vec<f64>,
    /// Defaults to a single coal source at 1 kg/kWh.
    #[serde(default = "default_sources")]
    pub emission_sources: Vec<EmissionSourceFile>,
    #[serde(default)]
    pub carbon_tax: TaxFile,
    /// `m`, default 1.
    #[serde(default = "one")]
    pub installs_per_year: f64,
    /// `phi`, default 365.
    #[serde(default = "days")]
    pub days_per_install_period: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSourceFile {
    pub name: String,
    pub kg_per_kwh: Vec<f64>,
    #[serde(default = "one")]
    pub share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKindFile {
    Existing,
    Candidate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteFile {
    pub id: u32,
    pub kind: SiteKindFile,
    pub position: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub allowed_types: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPointFile {
    pub id: u32,
    pub position: [f64; 2],
    #[serde(default = "one_usize")]
    pub activation_year: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_rate_by_year: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_rate: Option<f64>,
    /// Yearly growth of the peak rate, default 0.20.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerStateFile {
    pub total_w: f64,
    pub transmit_w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsTypeFile {
    pub id: usize,
    #[serde(default)]
    pub name: String,
    pub states: Vec<PowerStateFile>,
    /// Channel bandwidth in MHz, default 20.
    #[serde(default = "bandwidth")]
    pub bandwidth_mhz: f64,
    #[serde(default)]
    pub build_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solar: Option<SolarFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolarFile {
    /// $/W, a single value or one per year; default 3.
    #[serde(default = "unit_cost")]
    pub unit_cost_per_w: Vec<f64>,
    pub panel_rating_w: f64,
    pub panel_area_eff_m2: f64,
    pub battery_capacity_kwh: f64,
    /// Default 0.2.
    #[serde(default = "min_fraction")]
    pub battery_min_fraction: f64,
    /// Default 0.05 per year.
    #[serde(default = "battery_aging")]
    pub battery_aging_rate: f64,
    /// Default 0.01 per year.
    #[serde(default = "panel_aging")]
    pub panel_aging_rate: f64,
    pub battery_lifetime_years: usize,
    #[serde(default)]
    pub battery_cost: f64,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn days() -> f64 {
    365.0
}
fn bandwidth() -> f64 {
    20.0
}
fn unit_cost() -> Vec<f64> {
    vec![3.0]
}
fn min_fraction() -> f64 {
    0.2
}
fn battery_aging() -> f64 {
    0.05
}
fn panel_aging() -> f64 {
    0.01
}
fn default_sources() -> Vec<EmissionSourceFile> {
    vec![EmissionSourceFile { name: "coal".into(), kg_per_kwh: vec![1.0], share: 1.0 }]
}

pub const DEFAULT_GROWTH_RATE: f64 = 0.20;

impl InstanceFile {
    /// Turns the document into an instance with every per-year schedule
    /// spelled out. Invariants are checked separately by
    /// [`PlanningInstance::validate`].
    pub fn resolve(self) -> Result<PlanningInstance, InstanceError> {
        if self.schema != SCHEMA_VERSION {
            return Err(field_err(
                "schema",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema),
            ));
        }
        let years = self.horizon.years;

        let mut sites: Vec<Site> = self
            .sites
            .into_iter()
            .map(|s| Site {
                id: s.id,
                kind: match s.kind {
                    SiteKindFile::Existing => SiteKind::Existing,
                    SiteKindFile::Candidate => SiteKind::Candidate,
                },
                position: (s.position[0], s.position[1]),
                allowed_types: s.allowed_types,
            })
            .collect();
        // stable: existing sites first
        sites.sort_by_key(|s| s.kind == SiteKind::Candidate);

        let test_points = self
            .test_points
            .into_iter()
            .map(|tp| {
                let rates = match (tp.peak_rate_by_year, tp.initial_rate) {
                    (Some(_), Some(_)) => {
                        return Err(field_err(
                            format!("test_points[{}]", tp.id),
                            "give either peak_rate_by_year or initial_rate, not both",
                        ))
                    }
                    (Some(r), None) => {
                        if tp.growth_rate.is_some() {
                            return Err(field_err(
                                format!("test_points[{}].growth_rate", tp.id),
                                "only meaningful with initial_rate",
                            ));
                        }
                        r
                    }
                    (None, Some(r0)) => growth_schedule(r0, tp.growth_rate.unwrap_or(DEFAULT_GROWTH_RATE), years),
                    (None, None) => {
                        return Err(field_err(
                            format!("test_points[{}]", tp.id),
                            "missing peak_rate_by_year or initial_rate",
                        ))
                    }
                };
                Ok(TestPoint {
                    id: tp.id,
                    position: (tp.position[0], tp.position[1]),
                    activation_year: tp.activation_year,
                    peak_rate_by_year: rates,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let bs_types = self
            .bs_types
            .into_iter()
            .map(|t| BsTypeSpec {
                id: t.id,
                name: t.name,
                states: t
                    .states
                    .into_iter()
                    .map(|s| PowerState { total_w: s.total_w, transmit_w: s.transmit_w })
                    .collect(),
                bandwidth_mhz: t.bandwidth_mhz,
                build_cost: t.build_cost,
                solar: t.solar.map(|s| SolarEquipment {
                    unit_cost_per_w: s.unit_cost_per_w,
                    panel_rating_w: s.panel_rating_w,
                    panel_area_eff_m2: s.panel_area_eff_m2,
                    battery_capacity_kwh: s.battery_capacity_kwh,
                    battery_min_fraction: s.battery_min_fraction,
                    battery_aging_rate: s.battery_aging_rate,
                    panel_aging_rate: s.panel_aging_rate,
                    battery_lifetime_years: s.battery_lifetime_years,
                    battery_cost: s.battery_cost,
                }),
            })
            .collect();

        let e = self.economics;
        let tax = match (e.carbon_tax.schedule, e.carbon_tax.start, e.carbon_tax.step) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(field_err("economics.carbon_tax", "give either schedule or start/step"))
            }
            (Some(s), None, None) => s,
            (None, start, step) => {
                let (start, step) = (start.unwrap_or(0.0), step.unwrap_or(0.0));
                if start < 0.0 || step < 0.0 {
                    return Err(field_err("economics.carbon_tax", "start and step must be non-negative"));
                }
                default_tax_schedule(start, step, years)
            }
        };

        Ok(PlanningInstance {
            name: self.name,
            sites,
            test_points,
            bs_types,
            years,
            period_hours: self.horizon.period_hours,
            traffic_profile: self.profiles.traffic,
            illumination_w_m2: self.profiles.illumination_w_m2,
            radio: RadioParams {
                antenna_gain: self.radio.antenna_gain,
                path_loss_exponent: self.radio.path_loss_exponent,
                noise_w: self.radio.noise_w,
            },
            economics: Economics {
                discount_rate: e.discount_rate,
                inflation_rate: e.inflation_rate,
                grid_tariff_kwh: e.grid_tariff_kwh,
                tariff_period_multipliers: e.tariff_period_multipliers,
                emission_sources: e
                    .emission_sources
                    .into_iter()
                    .map(|s| EmissionSource { name: s.name, kg_per_kwh: s.kg_per_kwh, share: s.share })
                    .collect(),
                carbon_tax: tax,
                installs_per_year: e.installs_per_year,
                days_per_install_period: e.days_per_install_period,
            },
        })
    }

    /// Explicit form of an instance; loading it back yields an equal instance.
    pub fn from_instance(inst: &PlanningInstance) -> Self {
        let e = &inst.economics;
        InstanceFile {
            schema: SCHEMA_VERSION,
            name: inst.name.clone(),
            horizon: HorizonFile { years: inst.years, period_hours: inst.period_hours.clone() },
            profiles: ProfilesFile {
                traffic: inst.traffic_profile.clone(),
                illumination_w_m2: inst.illumination_w_m2.clone(),
            },
            radio: RadioFile {
                antenna_gain: inst.radio.antenna_gain,
                path_loss_exponent: inst.radio.path_loss_exponent,
                noise_w: inst.radio.noise_w,
            },
            economics: EconomicsFile {
                discount_rate: e.discount_rate,
                inflation_rate: e.inflation_rate,
                grid_tariff_kwh: e.grid_tariff_kwh,
                tariff_period_multipliers: e.tariff_period_multipliers.clone(),
                emission_sources: e
                    .emission_sources
                    .iter()
                    .map(|s| EmissionSourceFile {
                        name: s.name.clone(),
                        kg_per_kwh: s.kg_per_kwh.clone(),
                        share: s.share,
                    })
                    .collect(),
                carbon_tax: TaxFile { start: None, step: None, schedule: Some(e.carbon_tax.clone()) },
                installs_per_year: e.installs_per_year,
                days_per_install_period: e.days_per_install_period,
            },
            sites: inst
                .sites
                .iter()
                .map(|s| SiteFile {
                    id: s.id,
                    kind: match s.kind {
                        SiteKind::Existing => SiteKindFile::Existing,
                        SiteKind::Candidate => SiteKindFile::Candidate,
                    },
                    position: [s.position.0, s.position.1],
                    allowed_types: s.allowed_types.clone(),
                })
                .collect(),
            test_points: inst
                .test_points
                .iter()
                .map(|tp| TestPointFile {
                    id: tp.id,
                    position: [tp.position.0, tp.position.1],
                    activation_year: tp.activation_year,
                    peak_rate_by_year: Some(tp.peak_rate_by_year.clone()),
                    initial_rate: None,
                    growth_rate: None,
                })
                .collect(),
            bs_types: inst
                .bs_types
                .iter()
                .map(|t| BsTypeFile {
                    id: t.id,
                    name: t.name.clone(),
                    states: t
                        .states
                        .iter()
                        .map(|s| PowerStateFile { total_w: s.total_w, transmit_w: s.transmit_w })
                        .collect(),
                    bandwidth_mhz: t.bandwidth_mhz,
                    build_cost: t.build_cost,
                    solar: t.solar.as_ref().map(|s| SolarFile {
                        unit_cost_per_w: s.unit_cost_per_w.clone(),
                        panel_rating_w: s.panel_rating_w,
                        panel_area_eff_m2: s.panel_area_eff_m2,
                        battery_capacity_kwh: s.battery_capacity_kwh,
                        battery_min_fraction: s.battery_min_fraction,
                        battery_aging_rate: s.battery_aging_rate,
                        panel_aging_rate: s.panel_aging_rate,
                        battery_lifetime_years: s.battery_lifetime_years,
                        battery_cost: s.battery_cost,
                    }),
                })
                .collect(),
        }
    }
}
