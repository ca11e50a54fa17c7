//! Discounting, inflation and the equipment ageing kernels.
//!
//! Years are 1-based. Cash flows of year `q` are discounted by `(1+r)^-q`;
//! nominal prices of year `q` are the year-1 price times `(1+i)^(q-1)`.

use crate::num::Scalar;

pub fn discount_factor<T: Scalar>(rate: T, year: usize) -> T {
    (T::one() + rate).powi(-(year as i32))
}

pub fn inflation_factor<T: Scalar>(rate: T, year: usize) -> T {
    (T::one() + rate).powi(year as i32 - 1)
}

/// Carbon tax per year: `start + step * (q - 1)` for `q = 1..=years`.
pub fn default_tax_schedule<T: Scalar>(start: T, step: T, years: usize) -> Vec<T> {
    (0..years).map(|k| start + step * T::lit(k as f64)).collect()
}

/// Years (strictly after `install_year`, at most `horizon`) in which the
/// battery bank of an installation made in `install_year` is replaced.
pub fn replacement_years(install_year: usize, lifetime_years: usize, horizon: usize) -> Vec<usize> {
    if lifetime_years == 0 {
        return Vec::new();
    }
    (1..).map(|k| install_year + k * lifetime_years).take_while(|&y| y <= horizon).collect()
}

/// Age of the battery bank in service during `year`, counted from its last
/// replacement.
pub fn battery_age(install_year: usize, year: usize, lifetime_years: usize) -> usize {
    let age = year - install_year;
    if lifetime_years == 0 {
        age
    } else {
        age % lifetime_years
    }
}

/// Present value, at `install_year`, of the scheduled battery replacements.
pub fn replacement_cost_at_install<T: Scalar>(
    unit_cost: T,
    install_year: usize,
    lifetime_years: usize,
    horizon: usize,
    discount_rate: T,
    inflation_rate: T,
) -> T {
    replacement_years(install_year, lifetime_years, horizon)
        .into_iter()
        .map(|y| {
            unit_cost
                * inflation_factor(inflation_rate, y)
                * (T::one() + discount_rate).powi(-((y - install_year) as i32))
        })
        .fold(T::zero(), |acc, c| acc + c)
}

/// Panel output in kWh over a period: `area_eff * irradiance * hours`
/// derated by `(1 - ageing)^age`.
pub fn panel_yield_kwh<T: Scalar>(area_eff_m2: T, irradiance_w_m2: T, hours: T, ageing: T, age: usize) -> T {
    area_eff_m2 * irradiance_w_m2 * hours / T::lit(1000.0) * (T::one() - ageing).powi(age as i32)
}

/// Usable storage window `(min, max)` in kWh of a bank of nominal
/// `capacity_kwh` that has been in service for `age` years.
pub fn battery_window<T: Scalar>(capacity_kwh: T, min_fraction: T, ageing: T, age: usize) -> (T, T) {
    let max = capacity_kwh * (T::one() - ageing).powi(age as i32);
    (min_fraction * max, max)
}
