//! Unit conventions: energies in kWh, powers in W, durations in hours,
//! rates in Mbps, bandwidth in MHz, emissions in kg (reports in tons).

pub const WH_PER_KWH: f64 = 1000.0;
pub const KWH_PER_MWH: f64 = 1000.0;
pub const KG_PER_TON: f64 = 1000.0;
pub const HOURS_PER_DAY: f64 = 24.0;

/// Energy in kWh drawn by a constant load of `watts` over `hours`.
pub fn energy_kwh(watts: f64, hours: f64) -> f64 {
    watts * hours / WH_PER_KWH
}
