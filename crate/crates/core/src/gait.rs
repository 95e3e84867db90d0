//! Fixed-schedule trot: contact timing, swing-foot arcs and footholds.

use std::io::Write;

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    LF,
    RF,
    LH,
    RH,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::LF, Leg::RF, Leg::LH, Leg::RH];

    pub fn name(self) -> &'static str {
        match self {
            Leg::LF => "LF",
            Leg::RF => "RF",
            Leg::LH => "LH",
            Leg::RH => "RH",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GaitError {
    #[error("duty factor {0} outside [0.5, 1)")]
    DutyFactor(f64),
    #[error("step frequency {0} Hz must be positive")]
    Frequency(f64),
    #[error("step height {0} m must be non-negative")]
    Height(f64),
    #[error("unknown gait parameter set {0} (expected 1..=4)")]
    UnknownPreset(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitParams {
    pub duty_factor: f64,
    /// Gait cycles per second.
    pub step_frequency: f64,
    pub step_height: f64,
    /// Cycle-phase offsets in `Leg::ALL` order.
    pub offsets: [f64; 4],
}

impl GaitParams {
    pub const DEFAULT_STEP_HEIGHT: f64 = 0.08;

    /// Diagonal pairs LF/RH and RF/LH half a cycle apart.
    pub fn trot(duty_factor: f64, step_frequency: f64) -> Result<Self, GaitError> {
        let p = Self {
            duty_factor,
            step_frequency,
            step_height: Self::DEFAULT_STEP_HEIGHT,
            offsets: [0.0, 0.5, 0.5, 0.0],
        };
        p.validate()?;
        Ok(p)
    }

    /// Numbered trot parameter sets: `{d_f, f_s}` of
    /// `{0.55, 1.4}`, `{0.65, 1.4}`, `{0.55, 1.8}`, `{0.65, 1.8}`.
    pub fn preset(gp: usize) -> Result<Self, GaitError> {
        match gp {
            1 => Self::trot(0.55, 1.4),
            2 => Self::trot(0.65, 1.4),
            3 => Self::trot(0.55, 1.8),
            4 => Self::trot(0.65, 1.8),
            _ => Err(GaitError::UnknownPreset(gp)),
        }
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        if !(0.5..1.0).contains(&self.duty_factor) {
            return Err(GaitError::DutyFactor(self.duty_factor));
        }
        if !(self.step_frequency > 0.0 && self.step_frequency.is_finite()) {
            return Err(GaitError::Frequency(self.step_frequency));
        }
        if !(self.step_height >= 0.0) {
            return Err(GaitError::Height(self.step_height));
        }
        Ok(())
    }

    pub fn cycle_time(&self) -> f64 {
        1.0 / self.step_frequency
    }

    pub fn stance_duration(&self) -> f64 {
        self.duty_factor / self.step_frequency
    }

    pub fn swing_duration(&self) -> f64 {
        (1.0 - self.duty_factor) / self.step_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactMode {
    Stance,
    Swing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegPhase {
    pub mode: ContactMode,
    /// Position within the whole cycle, `[0, 1)`.
    pub cycle_phase: f64,
    /// Progress through the current stance or swing, `[0, 1)`.
    pub phase: f64,
}

/// Leg `i` is in stance iff `frac(t f_s + offset_i) < d_f`.
pub fn contact_state(t: f64, params: &GaitParams) -> [LegPhase; 4] {
    let df = params.duty_factor;
    params.offsets.map(|offset| {
        let c = (t * params.step_frequency + offset).rem_euclid(1.0);
        if c < df {
            LegPhase {
                mode: ContactMode::Stance,
                cycle_phase: c,
                phase: c / df,
            }
        } else {
            LegPhase {
                mode: ContactMode::Swing,
                cycle_phase: c,
                phase: (c - df) / (1.0 - df),
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingSample {
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
}

/// Swing arc from `liftoff` to `target` over `duration` seconds: quintic
/// smoothstep blend in all coordinates plus a `height * sin^3(pi phase)`
/// vertical bump. Position, velocity and acceleration are continuous, and the
/// latter two vanish at both ends.
pub fn swing_reference(phase: f64, liftoff: &Vec3, target: &Vec3, height: f64, duration: f64) -> SwingSample {
    let p = phase.clamp(0.0, 1.0);
    let s = p * p * p * (10.0 + p * (-15.0 + 6.0 * p));
    let ds = 30.0 * p * p * (1.0 - p) * (1.0 - p);
    let dds = 60.0 * p * (1.0 - p) * (1.0 - 2.0 * p);
    let d = target - liftoff;
    let (sn, cs) = (std::f64::consts::PI * p).sin_cos();
    let pi = std::f64::consts::PI;
    let bump = height * sn * sn * sn;
    let dbump = height * 3.0 * pi * sn * sn * cs;
    let ddbump = height * pi * pi * (6.0 * sn * cs * cs - 3.0 * sn * sn * sn);
    let up = Vec3::z();
    let inv = 1.0 / duration;
    SwingSample {
        pos: liftoff + d * s + up * bump,
        vel: (d * ds + up * dbump) * inv,
        acc: (d * dds + up * ddbump) * inv * inv,
    }
}

/// Ground point about which gravity on the whole body and the force `fe`
/// applied at `ee` have no horizontal moment. Centering the footholds on it
/// keeps the statically required moment about every diagonal support line at
/// zero.
pub fn balance_point(com: &Vec3, total_mass: f64, gravity: f64, ee: &Vec3, fe: &Vec3, ground: f64) -> Vec3 {
    let w = total_mass * gravity;
    let denom = w - fe.z;
    let hz = ee.z - ground;
    Vec3::new(
        (w * com.x + hz * fe.x - ee.x * fe.z) / denom,
        (w * com.y + hz * fe.y - ee.y * fe.z) / denom,
        ground,
    )
}

/// Touchdown target: nominal point shifted by half a stance of horizontal
/// base motion, on the ground.
pub fn foothold(nominal: &Vec3, base_velocity: &Vec3, stance_duration: f64, ground: f64) -> Vec3 {
    let shift = 0.5 * stance_duration;
    Vec3::new(nominal.x + shift * base_velocity.x, nominal.y + shift * base_velocity.y, ground)
}

/// Schedule samples `t, LF, RF, LH, RH` with 1 for stance and 0 for swing.
pub fn write_schedule_csv<W: Write>(out: W, params: &GaitParams, duration: f64, dt: f64) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "LF", "RF", "LH", "RH"])?;
    let steps = (duration / dt).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let mut row = vec![format!("{t:.6}")];
        for leg in contact_state(t, params) {
            row.push(if leg.mode == ContactMode::Stance { "1" } else { "0" }.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_point_cancels_horizontal_moment() {
        let com = Vec3::new(0.05, -0.02, 0.6);
        let ee = Vec3::new(0.7, 0.1, 0.9);
        let fe = Vec3::new(50.0, -20.0, 30.0);
        let (m, g) = (120.0, 9.81);
        let p = balance_point(&com, m, g, &ee, &fe, 0.02);
        assert_eq!(p.z, 0.02);
        let moment = (com - p).cross(&Vec3::new(0.0, 0.0, -m * g)) + (ee - p).cross(&fe);
        assert!(moment.x.abs() < 1e-9 && moment.y.abs() < 1e-9);
        let p0 = balance_point(&com, m, g, &ee, &Vec3::zeros(), 0.0);
        assert!((p0 - Vec3::new(com.x, com.y, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gp1_timing() {
        let p = GaitParams::preset(1).unwrap();
        assert!((p.cycle_time() - 0.714_285_7).abs() < 1e-6);
        assert!((p.stance_duration() - 0.392_857).abs() < 1e-6);
    }

    #[test]
    fn initial_contact_convention() {
        let s = contact_state(0.0, &GaitParams::preset(1).unwrap());
        assert!(s.iter().all(|l| l.mode == ContactMode::Stance));
        let half = GaitParams { duty_factor: 0.5, ..GaitParams::preset(1).unwrap() };
        let s = contact_state(0.0, &half);
        assert_eq!(s[0].mode, ContactMode::Stance);
        assert_eq!(s[1].mode, ContactMode::Swing);
    }

    #[test]
    fn invalid_parameters() {
        assert_eq!(GaitParams::trot(0.45, 1.0), Err(GaitError::DutyFactor(0.45)));
        assert_eq!(GaitParams::trot(1.0, 1.0), Err(GaitError::DutyFactor(1.0)));
        assert_eq!(GaitParams::trot(0.6, 0.0), Err(GaitError::Frequency(0.0)));
        assert_eq!(GaitParams::preset(5), Err(GaitError::UnknownPreset(5)));
    }

    #[test]
    fn swing_endpoints_and_apex() {
        let a = Vec3::new(0.3, 0.2, 0.0);
        let b = Vec3::new(0.35, 0.2, 0.0);
        let s0 = swing_reference(0.0, &a, &b, 0.08, 0.3);
        assert_eq!(s0.pos, a);
        assert!(s0.vel.amax() < 1e-15);
        let s1 = swing_reference(1.0, &a, &b, 0.08, 0.3);
        assert!((s1.pos - b).amax() < 1e-15);
        assert!(s1.vel.amax() < 1e-12 && s1.acc.amax() < 1e-12);
        let mid = swing_reference(0.5, &a, &b, 0.08, 0.3);
        assert!((mid.pos.z - 0.08).abs() < 1e-9);
    }

    #[test]
    fn foothold_projection() {
        let nominal = Vec3::new(0.37, 0.2, 0.03);
        assert_eq!(foothold(&nominal, &Vec3::zeros(), 0.393, 0.0), Vec3::new(0.37, 0.2, 0.0));
        let f = foothold(&nominal, &Vec3::new(0.2, 0.0, 0.1), 0.393, 0.0);
        assert!((f - Vec3::new(0.37 + 0.0393, 0.2, 0.0)).amax() < 1e-12);
    }
}
