//! Planning of green cellular network upgrades: instance model, radio and
//! demand tables, the mixed-integer program of the upgrade problem, and an
//! independent plan validator with cost and energy accounting.

pub mod battery;
pub mod builder;
pub mod bundled;
pub mod demand;
pub mod economics;
pub mod instance;
pub mod model;
pub mod names;
pub mod num;
pub mod radio;
pub mod report;
pub mod scenario;
pub mod schema;
pub mod solution;
pub mod units;
pub mod validate;

pub use builder::{apply_scenario, build_free_model, build_model, BuildError};
pub use demand::{CoverageTable, DemandTable, ModelTables, SolarSchedule};
pub use instance::{InstanceError, PlanningInstance};
pub use model::{MilpModel, ModelStats, RowFamily, Sense, VarKind};
pub use names::{VarFamily, VarName};
pub use scenario::{ScenarioId, ScenarioSpec};
pub use solution::PlanSolution;
pub use validate::{CostReport, EnergyReport, ViolationReport};

/// Double-precision radio link.
pub type Link = radio::Link<f64>;
/// Single-precision radio link.
pub type Link32 = radio::Link<f32>;
/// Double-precision battery period.
pub type BatteryPeriod = battery::BatteryPeriod<f64>;
/// Double-precision battery trajectory.
pub type BatteryTrajectory = battery::BatteryTrajectory<f64>;
