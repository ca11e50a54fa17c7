//! Number and name formatting shared by the LP and MPS writers.

use greenplan_core::MilpModel;

use crate::SolverError;

/// Longest variable or row name accepted by the writers.
pub const MAX_NAME_LEN: usize = 255;

/// Shortest decimal text that parses back to exactly `value`, which never
/// needs more than 17 significant digits. Very small and very large
/// magnitudes use exponent notation.
pub fn number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs();
    if (1e-5..1e16).contains(&magnitude) {
        format!("{value}")
    } else {
        format!("{value:e}")
    }
}

/// Rejects any variable or row name the file formats cannot carry.
pub fn check_names(model: &MilpModel) -> Result<(), SolverError> {
    let too_long = |name: String| {
        if name.len() > MAX_NAME_LEN {
            Err(SolverError::NameTooLong { name, limit: MAX_NAME_LEN })
        } else {
            Ok(())
        }
    };
    for v in &model.variables {
        too_long(v.name.to_string())?;
    }
    for c in &model.constraints {
        too_long(c.name())?;
    }
    Ok(())
}
