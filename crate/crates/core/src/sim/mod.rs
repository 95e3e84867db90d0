//! Closed-loop plant: floating-base dynamics under penalty ground contact,
//! a scripted end-effector force and the whole-body controller running at a
//! lower rate with zero-order hold.

mod contact;
mod log;
mod profile;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    forward_dynamics, frame_jacobian_with, gravity, mass_matrix, GeneralizedState, JacobianRows, Kinematics, RobotModel,
};
use crate::gait::{balance_point, contact_state, foothold, swing_reference, ContactMode, GaitParams};
use crate::template::{rk4_step, TemplateSample, TemplateState, Vec3};
use crate::wbc::{ControlFrames, Desireds, WbcController, WbcDiagnostics, WbcError, WbcInput};

pub use contact::{ground_contact_force, ContactParams};
pub use log::{write_sim_csv, SimLog, SimRecord, SIM_HEADER};
pub use profile::ForceProfile;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("simulation diverged at t = {t:.4} s: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("invalid simulation setup: {0}")]
    Setup(String),
    #[error("controller failed at t = {t:.4} s: {source}")]
    Controller { t: f64, source: WbcError },
}

/// What the legs do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locomotion {
    /// All four feet in contact throughout.
    Stand,
    /// Full stance until `start`, then the periodic schedule of `params`.
    Trot { params: GaitParams, start: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub duration: f64,
    pub physics_dt: f64,
    pub control_dt: f64,
    pub contact: ContactParams,
    /// PD gains turning swing position/velocity errors into foot accelerations.
    pub swing_kp: f64,
    pub swing_kd: f64,
    /// Swing touchdown points are placed this far below the ground so the
    /// penalty contact is already loaded when the leg switches to stance.
    pub touchdown_depth: f64,
    /// Any generalized velocity component above this (m/s or rad/s) is
    /// reported as divergence.
    pub max_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 5.0,
            physics_dt: 2.5e-4,
            control_dt: 2.5e-3,
            contact: ContactParams::default(),
            swing_kp: 400.0,
            swing_kd: 40.0,
            touchdown_depth: 5e-3,
            max_speed: 100.0,
        }
    }
}

impl SimConfig {
    /// Physics steps per control tick.
    pub fn substeps(&self) -> Result<usize, SimError> {
        if !(self.physics_dt > 0.0 && self.control_dt > 0.0 && self.duration > 0.0) {
            return Err(SimError::Setup("time steps and duration must be positive".into()));
        }
        let ratio = self.control_dt / self.physics_dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(SimError::Setup(format!(
                "control_dt {} is not an integer multiple of physics_dt {}",
                self.control_dt, self.physics_dt
            )));
        }
        Ok(n as usize)
    }

    pub fn ticks(&self) -> usize {
        (self.duration / self.control_dt).round() as usize
    }
}

/// Home posture with the trunk placed so that the feet carry the weight in
/// static penalty equilibrium.
pub fn standing_state(model: &RobotModel, contact: &ContactParams) -> Result<GeneralizedState, SimError> {
    let frames = ControlFrames::new(model).map_err(|e| SimError::Setup(e.to_string()))?;
    let mut s = GeneralizedState::home(model, Vec3::zeros());
    let kin = Kinematics::new(model, &s);
    let lowest = frames
        .feet
        .iter()
        .map(|&f| kin.frame_position(model, f).z)
        .fold(f64::INFINITY, f64::min);
    let depth = model.total_mass() * gravity().norm() / (4.0 * contact.normal_stiffness);
    s.base_position.z = contact.ground - depth - lowest;
    Ok(s)
}

/// Per-leg swing bookkeeping, latched at liftoff.
#[derive(Debug, Clone, Copy)]
struct SwingPlan {
    liftoff: Vec3,
    target: Vec3,
}

fn diverged(state: &GeneralizedState, limit: f64) -> Option<String> {
    let u = state.velocity();
    if u.iter().chain(state.joint_positions.iter()).chain(state.base_position.iter()).any(|v| !v.is_finite()) {
        return Some("non-finite state".into());
    }
    let peak = u.amax();
    (peak > limit).then(|| format!("generalized velocity {peak:.3e} exceeds {limit}"))
}

/// Generalized acceleration over one plant step.
///
/// Normal forces are explicit. The regularized friction behaves like a very
/// stiff viscous law near zero slip, so it is treated as linearly implicit in
/// the next velocity: `(M + dt J_t^T C J_t) udot = M udot_explicit` with
/// `C = mu N / max(|v_t|, v_reg)` frozen over the step.
fn physics_step(
    model: &RobotModel,
    state: &GeneralizedState,
    tau: &DVector<f64>,
    frames: &ControlFrames,
    fe: &Vec3,
    contact: &ContactParams,
    dt: f64,
) -> Result<DVector<f64>, String> {
    let kin = Kinematics::new(model, state);
    let u = state.velocity();
    let dof = model.dof();
    let mut external: Vec<(usize, Vec3)> = Vec::with_capacity(5);
    let mut implicit = DMatrix::<f64>::zeros(dof, dof);
    for &f in &frames.feet {
        let p = kin.frame_position(model, f);
        if p.z >= contact.ground {
            continue;
        }
        let j = frame_jacobian_with(model, &kin, f, JacobianRows::Translational);
        let v = &j * &u;
        let v = Vec3::new(v[0], v[1], v[2]);
        let force = ground_contact_force(&p, &v, contact);
        if force.z <= 0.0 {
            continue;
        }
        external.push((f, force));
        let c = contact.friction * force.z / v.xy().norm().max(contact.regularization_velocity);
        let jt = j.rows(0, 2);
        implicit += jt.transpose() * jt * (c * dt);
    }
    external.push((frames.ee, *fe));
    let explicit = forward_dynamics(model, state, tau, &external, &gravity()).map_err(|e| e.to_string())?;
    if external.len() == 1 {
        return Ok(explicit);
    }
    let m = mass_matrix(model, state);
    let rhs = &m * &explicit;
    (m + implicit)
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| "contact-augmented mass matrix is not positive definite".to_string())
}

/// Runs the closed loop from `initial`. With `controller = None` the joints
/// are left unactuated.
pub fn simulate(
    model: &RobotModel,
    mut controller: Option<&mut WbcController>,
    locomotion: &Locomotion,
    profile: &ForceProfile,
    initial: &GeneralizedState,
    cfg: &SimConfig,
) -> Result<SimLog, SimError> {
    let substeps = cfg.substeps()?;
    profile.validate().map_err(SimError::Setup)?;
    initial.validate(model).map_err(|e| SimError::Setup(e.to_string()))?;
    if let Locomotion::Trot { params, .. } = locomotion {
        params.validate().map_err(|e| SimError::Setup(e.to_string()))?;
    }
    let frames = ControlFrames::new(model).map_err(|e| SimError::Setup(e.to_string()))?;
    if let Some(c) = controller.as_deref() {
        cfg.contact
            .validate(c.config.friction_coefficient)
            .map_err(SimError::Setup)?;
    }
    let nj = model.n_joints();

    let mut state = initial.clone();
    let kin0 = Kinematics::new(model, &state);
    let desired = Desireds::hold(model, &state, frames.ee);
    let r0 = kin0.rot[0];
    // foot offsets from the support centroid, trunk frame
    let feet_rel: [Vec3; 4] =
        frames.feet.map(|f| r0.transpose() * (kin0.frame_position(model, f) - state.base_position));
    let centroid = feet_rel.iter().sum::<Vec3>() / 4.0;
    let nominal_rel = feet_rel.map(|p| p - centroid);
    let template_settings = controller.as_deref().map(|c| c.settings);
    let mut template = TemplateState::at_rest(state.base_position, kin0.frame_position(model, frames.ee));

    let mut base_acc = Vec3::zeros();
    let mut plans: [Option<SwingPlan>; 4] = [None; 4];
    let ticks = cfg.ticks();
    let mut records = Vec::with_capacity(ticks + 1);

    for tick in 0..=ticks {
        let t = tick as f64 * cfg.control_dt;
        if let Some(reason) = diverged(&state, cfg.max_speed) {
            return Err(SimError::Diverged { t, reason });
        }
        let kin = Kinematics::new(model, &state);
        let u = state.velocity();
        let feet: [Vec3; 4] = frames.feet.map(|f| kin.frame_position(model, f));
        let foot_vel: [Vec3; 4] = frames
            .feet
            .map(|f| frame_jacobian_with(model, &kin, f, JacobianRows::Translational) * &u)
            .map(|v| Vec3::new(v[0], v[1], v[2]));
        let grf: [Vec3; 4] =
            std::array::from_fn(|i| ground_contact_force(&feet[i], &foot_vel[i], &cfg.contact));
        let fe = profile.eval(t);
        let rot = kin.rot[0];
        let xb = state.base_position;
        let vb = state.base_linear_velocity;
        let wb = state.base_angular_velocity;

        // contact schedule and swing references
        let mut stance = [true; 4];
        let mut swing_accel = [Vec3::zeros(); 4];
        if let Locomotion::Trot { params, start } = locomotion {
            if t >= *start {
                let phases = contact_state(t - start, params);
                for leg in 0..4 {
                    if phases[leg].mode == ContactMode::Stance {
                        plans[leg] = None;
                        continue;
                    }
                    stance[leg] = false;
                    let plan = *plans[leg].get_or_insert_with(|| {
                        let center = balance_point(
                            &kin.center_of_mass(model),
                            model.total_mass(),
                            gravity().norm(),
                            &kin.frame_position(model, frames.ee),
                            &fe,
                            cfg.contact.ground,
                        );
                        let nominal = center + rot * nominal_rel[leg];
                        let mut target = foothold(&nominal, &vb, params.stance_duration(), cfg.contact.ground);
                        target.z -= cfg.touchdown_depth;
                        SwingPlan {
                            liftoff: feet[leg],
                            target,
                        }
                    });
                    let r = swing_reference(
                        phases[leg].phase,
                        &plan.liftoff,
                        &plan.target,
                        params.step_height,
                        params.swing_duration(),
                    );
                    let lever = feet[leg] - xb;
                    let p_rel = rot.transpose() * lever;
                    let v_rel = rot.transpose() * (foot_vel[leg] - vb - wb.cross(&lever));
                    let p_des = rot.transpose() * (r.pos - xb);
                    let v_des = rot.transpose() * (r.vel - vb - wb.cross(&(r.pos - xb)));
                    let a_des = rot.transpose() * (r.acc - base_acc);
                    swing_accel[leg] = a_des + (p_des - p_rel) * cfg.swing_kp + (v_des - v_rel) * cfg.swing_kd;
                }
            }
        }

        let (tau, diagnostics): (DVector<f64>, Option<WbcDiagnostics>) = match controller.as_deref_mut() {
            Some(c) => {
                let input = WbcInput {
                    model,
                    state: &state,
                    base_acceleration: base_acc,
                    stance,
                    swing_accel,
                    desired: &desired,
                    fe,
                };
                let out = c
                    .control_step(&input)
                    .map_err(|source| SimError::Controller { t, source })?;
                (out.tau, Some(out.diagnostics))
            }
            None => (DVector::zeros(nj), None),
        };

        records.push(SimRecord {
            t,
            state: state.clone(),
            ee: kin.frame_position(model, frames.ee),
            fe,
            feet,
            grf,
            stance,
            tau: tau.clone(),
            template: TemplateSample::of(t, &template),
            diagnostics,
        });
        if tick == ticks {
            break;
        }

        // reference system over the same tick with the same held force
        if let Some(s) = &template_settings {
            let hold = |_: f64| fe;
            let h = cfg.control_dt / 3.0;
            for k in 0..3 {
                template = rk4_step(&template, t + k as f64 * h, h, &hold, s);
            }
        }

        for _ in 0..substeps {
            let udot = physics_step(model, &state, &tau, &frames, &fe, &cfg.contact, cfg.physics_dt)
                .map_err(|reason| SimError::Diverged { t, reason })?;
            let u_next = state.velocity() + &udot * cfg.physics_dt;
            state.set_velocity(&u_next);
            state.advance_configuration(&u_next, cfg.physics_dt);
            base_acc = Vec3::new(udot[0], udot[1], udot[2]);
        }
    }
    Ok(SimLog { records })
}
