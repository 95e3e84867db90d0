use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::template::{AxisImpedance, ImpedanceSettings, TemplateError, Vec3};

/// Apparent-inertia level of one body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassLevel {
    Low,
    Nominal,
    High,
}

impl MassLevel {
    pub const ALL: [MassLevel; 3] = [MassLevel::Low, MassLevel::Nominal, MassLevel::High];

    pub fn name(self) -> &'static str {
        match self {
            MassLevel::Low => "low",
            MassLevel::Nominal => "nominal",
            MassLevel::High => "high",
        }
    }
}

impl fmt::Display for MassLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MassLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(MassLevel::Low),
            "nominal" => Ok(MassLevel::Nominal),
            "high" => Ok(MassLevel::High),
            other => Err(format!("unknown mass level `{other}` (expected low, nominal or high)")),
        }
    }
}

/// Rendered trunk and end-effector impedance parameters. Dampings are always
/// derived as critical for the chosen mass and stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpedancePresets {
    pub base_masses: [f64; 3],
    pub base_stiffness: f64,
    pub arm_masses: [f64; 3],
    pub arm_stiffness: f64,
    pub rot_stiffness: f64,
    pub rot_damping: f64,
}

impl Default for ImpedancePresets {
    fn default() -> Self {
        Self {
            base_masses: [4.0, 92.0, 184.0],
            base_stiffness: 1000.0,
            arm_masses: [0.4, 4.0, 10.0],
            arm_stiffness: 500.0,
            rot_stiffness: 1000.0,
            rot_damping: 150.0,
        }
    }
}

fn index(level: MassLevel) -> usize {
    match level {
        MassLevel::Low => 0,
        MassLevel::Nominal => 1,
        MassLevel::High => 2,
    }
}

impl ImpedancePresets {
    pub fn base_mass(&self, level: MassLevel) -> f64 {
        self.base_masses[index(level)]
    }

    pub fn arm_mass(&self, level: MassLevel) -> f64 {
        self.arm_masses[index(level)]
    }

    pub fn settings(&self, base: MassLevel, arm: MassLevel) -> Result<ImpedanceSettings, TemplateError> {
        let s = ImpedanceSettings {
            base: AxisImpedance::critically_damped(self.base_mass(base), self.base_stiffness)?,
            ee: AxisImpedance::critically_damped(self.arm_mass(arm), self.arm_stiffness)?,
            rot_stiffness: Vec3::repeat(self.rot_stiffness),
            rot_damping: Vec3::repeat(self.rot_damping),
        };
        s.validate()?;
        Ok(s)
    }
}
