//! Instances shipped with the toolchain, selectable by name.

use crate::instance::{InstanceError, PlanningInstance};

/// Name and TOML text of every bundled instance, oracle-sized ones first.
pub const BUNDLED: [(&str, &str); 5] = [
    ("micro1", include_str!("../../../instances/micro1.toml")),
    ("micro2", include_str!("../../../instances/micro2.toml")),
    ("micro3", include_str!("../../../instances/micro3.toml")),
    ("p1-like", include_str!("../../../instances/p1-like.toml")),
    ("p2-like", include_str!("../../../instances/p2-like.toml")),
];

/// Names of the instances small enough for exhaustive enumeration.
pub const MICRO: [&str; 3] = ["micro1", "micro2", "micro3"];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Loads a bundled instance; `None` for an unknown name.
pub fn load(name: &str) -> Option<Result<PlanningInstance, InstanceError>> {
    source(name).map(PlanningInstance::from_toml)
}
