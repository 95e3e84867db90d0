//! Linear double-mass spring-damper reference: one mass for the trunk, one for
//! the end-effector, a virtual spring-damper from the trunk to its desired
//! position and another between trunk and end-effector.
//!
//! Written in terms of the trunk position `x_b` and the relative end-effector
//! offset `x_be = x_e - x_b`:
//!
//! ```text
//! M_b xdd_b = K_b (x_b^d - x_b) + D_b (xd_b^d - xd_b) + K_e (x_be - x_be^d) + D_e (xd_be - xd_be^d)
//! M_e xdd_e = K_e (x_be^d - x_be) + D_e (xd_be^d - xd_be) + F_e
//! ```

use std::io::Write;

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("mass and stiffness must be positive (got m = {mass}, k = {stiffness})")]
    NonPositive { mass: f64, stiffness: f64 },
    #[error("impedance setting `{0}` must have strictly positive diagonal entries")]
    InvalidSetting(&'static str),
    #[error("time step {0} s exceeds 1e-3 s")]
    StepTooLarge(f64),
}

/// Damping giving a critically damped single mass-spring: `d^2 = 4 m k`.
pub fn critical_damping(mass: f64, stiffness: f64) -> Result<f64, TemplateError> {
    if !(mass > 0.0 && stiffness > 0.0) {
        return Err(TemplateError::NonPositive { mass, stiffness });
    }
    Ok(2.0 * (mass * stiffness).sqrt())
}

/// Diagonal mass, damping and stiffness for one body (per Cartesian axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisImpedance {
    pub mass: Vec3,
    pub damping: Vec3,
    pub stiffness: Vec3,
}

impl AxisImpedance {
    /// Same mass and stiffness on every axis, critically damped.
    pub fn critically_damped(mass: f64, stiffness: f64) -> Result<Self, TemplateError> {
        let d = critical_damping(mass, stiffness)?;
        Ok(Self {
            mass: Vec3::repeat(mass),
            damping: Vec3::repeat(d),
            stiffness: Vec3::repeat(stiffness),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceSettings {
    pub base: AxisImpedance,
    pub ee: AxisImpedance,
    /// Trunk orientation PD gains (N m / rad, N m s / rad).
    pub rot_stiffness: Vec3,
    pub rot_damping: Vec3,
}

impl ImpedanceSettings {
    pub fn validate(&self) -> Result<(), TemplateError> {
        let checks: [(&'static str, &Vec3); 8] = [
            ("M_b", &self.base.mass),
            ("D_b", &self.base.damping),
            ("K_b", &self.base.stiffness),
            ("M_e", &self.ee.mass),
            ("D_e", &self.ee.damping),
            ("K_e", &self.ee.stiffness),
            ("K_r", &self.rot_stiffness),
            ("D_r", &self.rot_damping),
        ];
        for (name, v) in checks {
            if !v.iter().all(|x| *x > 0.0 && x.is_finite()) {
                return Err(TemplateError::InvalidSetting(name));
            }
        }
        Ok(())
    }
}

/// Reference system state together with its (constant) set-points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateState {
    pub xb: Vec3,
    pub vb: Vec3,
    pub xe: Vec3,
    pub ve: Vec3,
    pub xb_des: Vec3,
    pub vb_des: Vec3,
    pub xbe_des: Vec3,
    pub vbe_des: Vec3,
}

impl TemplateState {
    /// At rest on its set-points.
    pub fn at_rest(xb: Vec3, xe: Vec3) -> Self {
        Self {
            xb,
            vb: Vec3::zeros(),
            xe,
            ve: Vec3::zeros(),
            xb_des: xb,
            vb_des: Vec3::zeros(),
            xbe_des: xe - xb,
            vbe_des: Vec3::zeros(),
        }
    }

    pub fn xbe(&self) -> Vec3 {
        self.xe - self.xb
    }

    pub fn vbe(&self) -> Vec3 {
        self.ve - self.vb
    }

    /// Virtual energy stored in the two masses and springs.
    pub fn energy(&self, s: &ImpedanceSettings) -> f64 {
        let eb = self.xb - self.xb_des;
        let ebe = self.xbe() - self.xbe_des;
        let vb = self.vb - self.vb_des;
        let ve = self.ve - self.vb_des - self.vbe_des;
        0.5 * (vb.component_mul(&s.base.mass).dot(&vb)
            + ve.component_mul(&s.ee.mass).dot(&ve)
            + eb.component_mul(&s.base.stiffness).dot(&eb)
            + ebe.component_mul(&s.ee.stiffness).dot(&ebe))
    }
}

/// Trunk and end-effector accelerations of the reference system.
pub fn template_rhs(state: &TemplateState, fe: &Vec3, s: &ImpedanceSettings) -> (Vec3, Vec3) {
    let ebe = state.xbe() - state.xbe_des;
    let debe = state.vbe() - state.vbe_des;
    let arm_wrench = s.ee.stiffness.component_mul(&ebe) + s.ee.damping.component_mul(&debe);
    let fb = s.base.stiffness.component_mul(&(state.xb_des - state.xb))
        + s.base.damping.component_mul(&(state.vb_des - state.vb))
        + arm_wrench;
    let fe_total = -arm_wrench + fe;
    (fb.component_div(&s.base.mass), fe_total.component_div(&s.ee.mass))
}

/// One classical fourth-order Runge-Kutta step of the reference system.
pub fn rk4_step(
    state: &TemplateState,
    t: f64,
    dt: f64,
    force: &impl Fn(f64) -> Vec3,
    s: &ImpedanceSettings,
) -> TemplateState {
    let deriv = |st: &TemplateState, t: f64| {
        let (ab, ae) = template_rhs(st, &force(t), s);
        (st.vb, ab, st.ve, ae)
    };
    let shifted = |st: &TemplateState, k: &(Vec3, Vec3, Vec3, Vec3), h: f64| TemplateState {
        xb: st.xb + k.0 * h,
        vb: st.vb + k.1 * h,
        xe: st.xe + k.2 * h,
        ve: st.ve + k.3 * h,
        ..*st
    };
    let k1 = deriv(state, t);
    let k2 = deriv(&shifted(state, &k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = deriv(&shifted(state, &k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = deriv(&shifted(state, &k3, dt), t + dt);
    let w = dt / 6.0;
    TemplateState {
        xb: state.xb + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * w,
        vb: state.vb + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * w,
        xe: state.xe + (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) * w,
        ve: state.ve + (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3) * w,
        ..*state
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateSample {
    pub t: f64,
    pub xb: Vec3,
    pub vb: Vec3,
    pub xe: Vec3,
    pub ve: Vec3,
}

impl TemplateSample {
    pub fn of(t: f64, s: &TemplateState) -> Self {
        Self {
            t,
            xb: s.xb,
            vb: s.vb,
            xe: s.xe,
            ve: s.ve,
        }
    }
}

pub type Trajectory = Vec<TemplateSample>;

/// Integrates the reference from `initial` over `[0, duration]`, sampling
/// every `dt`.
pub fn integrate_template(
    initial: &TemplateState,
    force: impl Fn(f64) -> Vec3,
    s: &ImpedanceSettings,
    dt: f64,
    duration: f64,
) -> Result<Trajectory, TemplateError> {
    if !(dt > 0.0 && dt <= 1e-3 + 1e-15) {
        return Err(TemplateError::StepTooLarge(dt));
    }
    s.validate()?;
    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut st = *initial;
    out.push(TemplateSample::of(0.0, &st));
    for k in 0..steps {
        let t = k as f64 * dt;
        st = rk4_step(&st, t, dt, &force, s);
        out.push(TemplateSample::of((k + 1) as f64 * dt, &st));
    }
    Ok(out)
}

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t", "xb_x", "xb_y", "xb_z", "vb_x", "vb_y", "vb_z", "xe_x", "xe_y", "xe_z", "ve_x", "ve_y", "ve_z",
];

/// Writes `t, xb_x..z, vb_x..z, xe_x..z, ve_x..z` rows.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &[TemplateSample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in traj {
        let mut row = Vec::with_capacity(13);
        row.push(format!("{:.6}", s.t));
        for v in [&s.xb, &s.vb, &s.xe, &s.ve] {
            row.extend(v.iter().map(|x| format!("{x:.9e}")));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
