use serde::{Deserialize, Serialize};

use crate::template::Vec3;

/// Scripted force applied at the end-effector, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceProfile {
    Zero,
    Step {
        magnitude: f64,
        direction: [f64; 3],
        onset: f64,
    },
    /// Linear frequency sweep from `f_start` to `f_end` over `duration`
    /// seconds after `onset`; zero outside that window.
    Chirp {
        amplitude: f64,
        f_start: f64,
        f_end: f64,
        duration: f64,
        direction: [f64; 3],
        onset: f64,
    },
}

impl ForceProfile {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |d: &[f64; 3]| {
            let n = Vec3::from(*d).norm();
            if n > 0.0 && n.is_finite() {
                Ok(())
            } else {
                Err("force direction must be a non-zero finite vector".to_string())
            }
        };
        match self {
            ForceProfile::Zero => Ok(()),
            ForceProfile::Step {
                magnitude, direction, ..
            } => {
                if !magnitude.is_finite() {
                    return Err("step magnitude must be finite".into());
                }
                unit(direction)
            }
            ForceProfile::Chirp {
                amplitude,
                f_start,
                f_end,
                duration,
                direction,
                ..
            } => {
                if !amplitude.is_finite() {
                    return Err("chirp amplitude must be finite".into());
                }
                if !(f_start <= f_end) {
                    return Err("chirp start frequency exceeds end frequency".into());
                }
                if !(*duration > 0.0) {
                    return Err("chirp duration must be positive".into());
                }
                unit(direction)
            }
        }
    }

    /// Time at which the force first becomes non-zero.
    pub fn onset(&self) -> f64 {
        match self {
            ForceProfile::Zero => 0.0,
            ForceProfile::Step { onset, .. } | ForceProfile::Chirp { onset, .. } => *onset,
        }
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        match *self {
            ForceProfile::Zero => Vec3::zeros(),
            ForceProfile::Step {
                magnitude,
                direction,
                onset,
            } => {
                if t >= onset {
                    Vec3::from(direction).normalize() * magnitude
                } else {
                    Vec3::zeros()
                }
            }
            ForceProfile::Chirp {
                amplitude,
                f_start,
                f_end,
                duration,
                direction,
                onset,
            } => {
                let tau = t - onset;
                if !(0.0..=duration).contains(&tau) {
                    return Vec3::zeros();
                }
                let f = f_start + (f_end - f_start) * tau / (2.0 * duration);
                Vec3::from(direction).normalize() * (amplitude * (2.0 * std::f64::consts::PI * f * tau).sin())
            }
        }
    }

    /// Instantaneous sweep frequency (Hz), `None` outside a chirp.
    pub fn frequency(&self, t: f64) -> Option<f64> {
        match *self {
            ForceProfile::Chirp {
                f_start,
                f_end,
                duration,
                onset,
                ..
            } => {
                let tau = t - onset;
                (0.0..=duration).contains(&tau).then(|| f_start + (f_end - f_start) * tau / duration)
            }
            _ => None,
        }
    }
}
