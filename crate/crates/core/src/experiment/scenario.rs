use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::presets::{ImpedancePresets, MassLevel};
use super::ExperimentError;
use crate::gait::GaitParams;
use crate::sim::{ForceProfile, Locomotion, SimConfig};
use crate::wbc::WbcConfig;

/// Registered experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Full stance, force step, trunk apparent mass varied.
    StandStepBaseInertia,
    /// Full stance, force step, end-effector apparent mass varied.
    StandStepArmInertia,
    /// Full stance, planar frequency sweep at nominal settings.
    StandChirp,
    /// Trot in place with a force step, gait pattern and end-effector mass varied.
    Trot,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::StandStepBaseInertia,
        ScenarioKind::StandStepArmInertia,
        ScenarioKind::StandChirp,
        ScenarioKind::Trot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::StandStepBaseInertia => "stand-step-base-inertia",
            ScenarioKind::StandStepArmInertia => "stand-step-arm-inertia",
            ScenarioKind::StandChirp => "stand-chirp",
            ScenarioKind::Trot => "trot",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::UnknownScenario(s.to_string()))
    }
}

/// Force step used by the stance and trot scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepScenario {
    pub magnitude: f64,
    pub direction: [f64; 3],
    pub onset: f64,
    pub duration: f64,
}

impl Default for StepScenario {
    fn default() -> Self {
        Self {
            magnitude: 50.0,
            direction: [1.0, 0.0, 0.0],
            onset: 1.0,
            duration: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpScenario {
    pub amplitude: f64,
    pub f_start: f64,
    pub f_end: f64,
    /// Length of the sweep; the run lasts `onset + sweep + settle`.
    pub sweep: f64,
    pub direction: [f64; 3],
    pub onset: f64,
    pub settle: f64,
}

impl Default for ChirpScenario {
    fn default() -> Self {
        Self {
            amplitude: 50.0,
            f_start: 0.0,
            f_end: 5.0,
            sweep: 10.0,
            direction: [1.0, 1.0, 0.0],
            onset: 1.0,
            settle: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrotScenario {
    /// Gait start; the robot stands before.
    pub start: f64,
    pub step_height: f64,
    pub step: StepScenario,
}

impl Default for TrotScenario {
    fn default() -> Self {
        Self {
            start: 0.5,
            step_height: GaitParams::DEFAULT_STEP_HEIGHT,
            step: StepScenario {
                onset: 2.0,
                ..StepScenario::default()
            },
        }
    }
}

/// Everything a run needs besides the CLI selection. Parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Robot description; the bundled model when absent.
    pub model: Option<PathBuf>,
    pub presets: ImpedancePresets,
    pub sim: SimConfig,
    /// Controller for the full-stance scenarios.
    pub controller: WbcConfig,
    /// Controller for the trot scenarios.
    pub trot_controller: WbcConfig,
    pub step: StepScenario,
    pub chirp: ChirpScenario,
    pub trot: TrotScenario,
    /// Consecutive held (unsolved) controller ticks tolerated before a run
    /// is declared failed.
    pub max_held_ticks: usize,
}

/// Angular trunk weight in the trot controller. With only two diagonal
/// point feet the ground cannot produce a moment about the support line, so
/// a stiff orientation objective trades the arm task for a wrench that is not
/// realizable and the gait destabilizes.
pub const TROT_ANGULAR_WEIGHT: f64 = 1.0;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let controller = WbcConfig::default();
        let mut trot_controller = controller.clone();
        for w in &mut trot_controller.base_weight[3..] {
            *w = TROT_ANGULAR_WEIGHT;
        }
        Self {
            model: None,
            presets: ImpedancePresets::default(),
            sim: SimConfig::default(),
            controller,
            trot_controller,
            step: StepScenario::default(),
            chirp: ChirpScenario::default(),
            trot: TrotScenario::default(),
            max_held_ticks: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// CLI-level selection; absent fields expand to every registered value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Selection {
    pub mass: Option<MassLevel>,
    pub gp: Option<usize>,
    pub ee_inertia: Option<MassLevel>,
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Unique run name, also the log file stem.
    pub name: String,
    pub kind: ScenarioKind,
    pub base_mass: MassLevel,
    pub arm_mass: MassLevel,
    pub gp: Option<usize>,
    pub locomotion: Locomotion,
    pub profile: ForceProfile,
    pub duration: f64,
    /// Start of the metrics window.
    pub window_start: f64,
    pub controller: WbcConfig,
}

fn step_profile(s: &StepScenario) -> ForceProfile {
    ForceProfile::Step {
        magnitude: s.magnitude,
        direction: s.direction,
        onset: s.onset,
    }
}

impl ExperimentConfig {
    /// Expands a kind and selection into concrete runs in a stable order.
    pub fn scenarios(&self, kind: ScenarioKind, sel: &Selection) -> Result<Vec<Scenario>, ExperimentError> {
        let reject = |flag: &str| ExperimentError::Selection(format!("{flag} does not apply to scenario `{kind}`"));
        let levels = |l: Option<MassLevel>| l.map_or(MassLevel::ALL.to_vec(), |l| vec![l]);
        let stand = |base: MassLevel, arm: MassLevel, name: String| Scenario {
            name,
            kind,
            base_mass: base,
            arm_mass: arm,
            gp: None,
            locomotion: Locomotion::Stand,
            profile: step_profile(&self.step),
            duration: self.step.duration,
            window_start: self.step.onset,
            controller: self.controller.clone(),
        };
        let out = match kind {
            ScenarioKind::StandStepBaseInertia => {
                if sel.gp.is_some() {
                    return Err(reject("--gp"));
                }
                if sel.ee_inertia.is_some() {
                    return Err(reject("--ee-inertia"));
                }
                levels(sel.mass)
                    .into_iter()
                    .map(|l| stand(l, MassLevel::Nominal, format!("{kind}-{l}")))
                    .collect()
            }
            ScenarioKind::StandStepArmInertia => {
                if sel.gp.is_some() {
                    return Err(reject("--gp"));
                }
                if sel.ee_inertia.is_some() {
                    return Err(reject("--ee-inertia"));
                }
                levels(sel.mass)
                    .into_iter()
                    .map(|l| stand(MassLevel::Nominal, l, format!("{kind}-{l}")))
                    .collect()
            }
            ScenarioKind::StandChirp => {
                if sel.gp.is_some() {
                    return Err(reject("--gp"));
                }
                if sel.ee_inertia.is_some() {
                    return Err(reject("--ee-inertia"));
                }
                let c = &self.chirp;
                let l = sel.mass.unwrap_or(MassLevel::Nominal);
                vec![Scenario {
                    name: format!("{kind}-{l}"),
                    kind,
                    base_mass: l,
                    arm_mass: l,
                    gp: None,
                    locomotion: Locomotion::Stand,
                    profile: ForceProfile::Chirp {
                        amplitude: c.amplitude,
                        f_start: c.f_start,
                        f_end: c.f_end,
                        duration: c.sweep,
                        direction: c.direction,
                        onset: c.onset,
                    },
                    duration: c.onset + c.sweep + c.settle,
                    window_start: c.onset,
                    controller: self.controller.clone(),
                }]
            }
            ScenarioKind::Trot => {
                if sel.mass.is_some() {
                    return Err(reject("--mass"));
                }
                if sel.ee_inertia == Some(MassLevel::Nominal) {
                    return Err(ExperimentError::Selection("--ee-inertia for trot is low or high".into()));
                }
                let gps = match sel.gp {
                    Some(g @ 1..=4) => vec![g],
                    Some(g) => return Err(ExperimentError::Selection(format!("--gp {g} is not in 1..=4"))),
                    None => vec![1, 2, 3, 4],
                };
                let inertias = sel.ee_inertia.map_or(vec![MassLevel::Low, MassLevel::High], |l| vec![l]);
                let t = &self.trot;
                let mut out = Vec::new();
                for gp in gps {
                    let mut gait = GaitParams::preset(gp).map_err(|e| ExperimentError::Config(e.to_string()))?;
                    gait.step_height = t.step_height;
                    for &l in &inertias {
                        out.push(Scenario {
                            name: format!("{kind}-gp{gp}-{l}"),
                            kind,
                            base_mass: MassLevel::Nominal,
                            arm_mass: l,
                            gp: Some(gp),
                            locomotion: Locomotion::Trot {
                                params: gait,
                                start: t.start,
                            },
                            profile: step_profile(&t.step),
                            duration: t.step.duration,
                            window_start: t.step.onset,
                            controller: self.trot_controller.clone(),
                        });
                    }
                }
                out
            }
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("walk".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn trot_grid_is_ordered_by_pattern_then_inertia() {
        let c = ExperimentConfig::default();
        let names: Vec<_> = c
            .scenarios(ScenarioKind::Trot, &Selection::default())
            .unwrap()
            .into_iter()
            .map(|s| s.name)
            .collect();
        assert_eq!(names.len(), 8);
        assert_eq!(names[0], "trot-gp1-low");
        assert_eq!(names[1], "trot-gp1-high");
        assert_eq!(names[7], "trot-gp4-high");
    }

    #[test]
    fn selection_filters_and_rejects() {
        let c = ExperimentConfig::default();
        let one = c
            .scenarios(
                ScenarioKind::StandStepBaseInertia,
                &Selection {
                    mass: Some(MassLevel::High),
                    ..Selection::default()
                },
            )
            .unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].base_mass, MassLevel::High);
        let bad = Selection {
            gp: Some(2),
            ..Selection::default()
        };
        assert!(c.scenarios(ScenarioKind::StandChirp, &bad).is_err());
        let bad = Selection {
            gp: Some(5),
            ..Selection::default()
        };
        assert!(c.scenarios(ScenarioKind::Trot, &bad).is_err());
    }

    #[test]
    fn config_parses_partial_toml() {
        let c = ExperimentConfig::from_toml("max_held_ticks = 3\n[step]\nmagnitude = 20.0\n[controller]\narm_weight = 50.0\n")
            .unwrap();
        assert_eq!(c.max_held_ticks, 3);
        assert_eq!(c.step.magnitude, 20.0);
        assert_eq!(c.step.onset, 1.0);
        assert_eq!(c.controller.arm_weight, 50.0);
        assert_eq!(c.trot_controller.base_weight[5], TROT_ANGULAR_WEIGHT);
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }
}
