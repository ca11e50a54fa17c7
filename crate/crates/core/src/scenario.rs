//! The eight planning scenarios and the variable restrictions each imposes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    B,
    S,
    O,
    Z,
    SO,
    SZ,
    SZ0,
    FSZ,
}

/// Which installations are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstallRule {
    Free,
    FirstYearOnly,
    SolarTypesOnly,
}

/// Which power states a running station may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateRule {
    /// Always at maximum power.
    MaxOnly,
    /// Idle or maximum power (sleep mode).
    TwoState,
    Free,
}

/// Whether stations may run on their batteries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryRule {
    Off,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub install: InstallRule,
    pub states: StateRule,
    pub battery: BatteryRule,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown scenario `{0}` (expected one of B, S, O, Z, S+O, S+Z, S+Z0, FS+Z)")]
pub struct UnknownScenario(pub String);

impl ScenarioId {
    /// All scenarios in reporting order.
    pub const ALL: [ScenarioId; 8] = [Self::B, Self::S, Self::O, Self::Z, Self::SO, Self::SZ, Self::SZ0, Self::FSZ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::B => "B",
            Self::S => "S",
            Self::O => "O",
            Self::Z => "Z",
            Self::SO => "S+O",
            Self::SZ => "S+Z",
            Self::SZ0 => "S+Z0",
            Self::FSZ => "FS+Z",
        }
    }

    /// File-name friendly spelling (`S+Z0` becomes `S_Z0`).
    pub fn slug(self) -> String {
        self.as_str().replace('+', "_")
    }

    pub fn spec(self) -> ScenarioSpec {
        use BatteryRule as Bt;
        use InstallRule as In;
        use StateRule as St;
        let (install, states, battery) = match self {
            Self::B => (In::Free, St::MaxOnly, Bt::Off),
            Self::S => (In::Free, St::MaxOnly, Bt::Free),
            Self::O => (In::Free, St::TwoState, Bt::Off),
            Self::Z => (In::Free, St::Free, Bt::Off),
            Self::SO => (In::Free, St::TwoState, Bt::Free),
            Self::SZ => (In::Free, St::Free, Bt::Free),
            Self::SZ0 => (In::FirstYearOnly, St::Free, Bt::Free),
            Self::FSZ => (In::SolarTypesOnly, St::Free, Bt::Free),
        };
        ScenarioSpec { id: self, install, states, battery }
    }

    /// Scenarios whose feasible set contains this one's.
    pub fn relaxations(self) -> &'static [ScenarioId] {
        match self {
            Self::B => &[Self::S, Self::O, Self::Z, Self::SO, Self::SZ],
            Self::S => &[Self::SO, Self::SZ],
            Self::O => &[Self::Z, Self::SO, Self::SZ],
            Self::Z | Self::SO | Self::SZ0 | Self::FSZ => &[Self::SZ],
            Self::SZ => &[],
        }
    }
}

impl ScenarioSpec {
    /// Table markers for the `z`, `v`, `u`, `h` families: `F` free, `0` fixed,
    /// `*` first year only, `**` solar types only, `***` two states only.
    pub fn markers(&self) -> [&'static str; 4] {
        let z = match self.install {
            InstallRule::Free => "F",
            InstallRule::FirstYearOnly => "*",
            InstallRule::SolarTypesOnly => "**",
        };
        let v = match self.states {
            StateRule::MaxOnly => "0",
            StateRule::TwoState => "***",
            StateRule::Free => "F",
        };
        let u = match self.battery {
            BatteryRule::Off => "0",
            BatteryRule::Free => "F",
        };
        [z, v, u, "F"]
    }

    pub fn uses_solar(&self) -> bool {
        self.battery == BatteryRule::Free || self.install == InstallRule::SolarTypesOnly
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = UnknownScenario;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let wanted = text.trim().replace('_', "+");
        Self::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(&wanted))
            .ok_or_else(|| UnknownScenario(text.to_string()))
    }
}
