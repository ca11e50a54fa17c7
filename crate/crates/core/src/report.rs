//! Tabular rendering of cost and energy reports.

use crate::validate::{CostReport, EnergyReport};

/// Column order of cost tables.
pub const COST_COLUMNS: [&str; 10] =
    ["scenario", "Z", "delta_pct", "Z_c", "Z_s", "Z_op", "Z_g", "Z_CO2", "Z_s_per_kWh", "Z_s_star_per_kWh"];

/// Column order of energy tables.
pub const ENERGY_COLUMNS: [&str; 6] = ["scenario", "E_N", "E_G", "CO2", "E_si", "E_su"];

/// Marker printed where a ratio has a zero denominator.
pub const NOT_AVAILABLE: &str = "NA";

/// Shortest text that parses back to the same `f64`.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        // avoid printing negative zero
        return "0".to_string();
    }
    format!("{value}")
}

pub fn format_optional(value: Option<f64>) -> String {
    value.map_or_else(|| NOT_AVAILABLE.to_string(), format_number)
}

pub fn cost_row(label: &str, r: &CostReport) -> Vec<String> {
    vec![
        label.to_string(),
        format_number(r.total),
        format_optional(r.delta_pct),
        format_number(r.capital),
        format_number(r.solar_capital),
        format_number(r.operating),
        format_number(r.grid),
        format_number(r.carbon),
        format_optional(r.solar_per_kwh_produced),
        format_optional(r.solar_per_kwh_used),
    ]
}

pub fn energy_row(label: &str, r: &EnergyReport) -> Vec<String> {
    vec![
        label.to_string(),
        format_number(r.network),
        format_number(r.grid),
        format_number(r.co2_tons),
        format_number(r.solar_produced),
        format_number(r.solar_used),
    ]
}
