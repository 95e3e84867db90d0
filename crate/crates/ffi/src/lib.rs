//! C ABI over the `qwbc` crate.
//!
//! Objects cross the boundary as opaque heap handles created by a `*_new`
//! function and released by the matching `*_free`. Every fallible call
//! returns a [`QwbcStatus`]; on failure a description is available from
//! [`qwbc_last_error`] on the same thread until the next failing call.
//! Panics are caught at the boundary and reported as [`QwbcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};
use qwbc::dynamics::{GeneralizedState, RobotModel};
use qwbc::experiment::{
    emit_summary, run_all, ExperimentConfig, ExperimentError, ImpedancePresets, MassLevel, ScenarioResult, Selection,
};
use qwbc::qp::QpStatus;
use qwbc::sim::{standing_state, ContactParams};
use qwbc::wbc::{Desireds, WbcConfig, WbcController, WbcInput};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwbcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Model = 3,
    Controller = 4,
    Simulation = 5,
    Io = 6,
    Panic = 7,
}

/// Selector value meaning "every level" in [`qwbc_run_new`].
pub const QWBC_ALL: i32 = -1;
pub const QWBC_MASS_LOW: i32 = 0;
pub const QWBC_MASS_NOMINAL: i32 = 1;
pub const QWBC_MASS_HIGH: i32 = 2;

/// Solver outcome of one control tick.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QwbcStepInfo {
    /// 1 when the QP was solved to tolerance.
    pub optimal: u8,
    /// 1 when the previous torques were reused.
    pub held: u8,
    pub iterations: usize,
    pub max_residual: f64,
}

pub struct QwbcModel {
    model: RobotModel,
}

pub struct QwbcController {
    model: RobotModel,
    controller: WbcController,
    desired: Desireds,
}

pub struct QwbcRun {
    results: Vec<ScenarioResult>,
    names: Vec<CString>,
    summary: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(QwbcStatus, String);

impl Failure {
    fn new(status: QwbcStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let status = match &e {
            ExperimentError::UnknownScenario(_) | ExperimentError::Selection(_) | ExperimentError::Config(_) => {
                QwbcStatus::InvalidArgument
            }
            ExperimentError::Model(_) => QwbcStatus::Model,
            ExperimentError::Template(_) | ExperimentError::Controller(_) => QwbcStatus::Controller,
            ExperimentError::Sim { .. } | ExperimentError::PersistentQpFailure { .. } | ExperimentError::Metrics(_) => {
                QwbcStatus::Simulation
            }
            ExperimentError::Io(_) => QwbcStatus::Io,
        };
        Self(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QwbcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QwbcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            QwbcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(QwbcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(QwbcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, want: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::new(QwbcStatus::NullPointer, format!("{what} is null")));
    }
    if len != want {
        return Err(Failure::new(QwbcStatus::InvalidArgument, format!("{what} has length {len}, expected {want}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, want: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::new(QwbcStatus::NullPointer, format!("{what} is null")));
    }
    if len != want {
        return Err(Failure::new(QwbcStatus::InvalidArgument, format!("{what} has length {len}, expected {want}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Failure::new(QwbcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn level(v: i32, what: &str) -> Result<Option<MassLevel>, Failure> {
    match v {
        QWBC_ALL => Ok(None),
        QWBC_MASS_LOW => Ok(Some(MassLevel::Low)),
        QWBC_MASS_NOMINAL => Ok(Some(MassLevel::Nominal)),
        QWBC_MASS_HIGH => Ok(Some(MassLevel::High)),
        other => Err(Failure::new(QwbcStatus::InvalidArgument, format!("{what}: unknown mass level {other}"))),
    }
}

/// Configuration `[x y z qw qx qy qz joints..]` and velocity
/// `[vx vy vz wx wy wz joint rates..]` into a state.
fn state_from(model: &RobotModel, q: &[f64], u: &[f64]) -> Result<GeneralizedState, Failure> {
    let nj = model.n_joints();
    let quat = Quaternion::new(q[3], q[4], q[5], q[6]);
    if !quat.norm().is_normal() {
        return Err(Failure::new(QwbcStatus::InvalidArgument, "base quaternion is zero or not finite"));
    }
    let s = GeneralizedState {
        base_position: Vector3::new(q[0], q[1], q[2]),
        base_orientation: UnitQuaternion::from_quaternion(quat),
        joint_positions: DVector::from_column_slice(&q[7..7 + nj]),
        base_linear_velocity: Vector3::new(u[0], u[1], u[2]),
        base_angular_velocity: Vector3::new(u[3], u[4], u[5]),
        joint_velocities: DVector::from_column_slice(&u[6..6 + nj]),
    };
    s.validate(model).map_err(|e| Failure::new(QwbcStatus::InvalidArgument, e.to_string()))?;
    Ok(s)
}

fn state_into(s: &GeneralizedState, q: &mut [f64], u: &mut [f64]) {
    let quat = s.base_orientation.quaternion();
    q[..3].copy_from_slice(s.base_position.as_slice());
    q[3..7].copy_from_slice(&[quat.w, quat.i, quat.j, quat.k]);
    q[7..].copy_from_slice(s.joint_positions.as_slice());
    u[..3].copy_from_slice(s.base_linear_velocity.as_slice());
    u[3..6].copy_from_slice(s.base_angular_velocity.as_slice());
    u[6..].copy_from_slice(s.joint_velocities.as_slice());
}

/// Description of the last failure on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qwbc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads the bundled quadruped-with-arm model (`path == NULL`) or a model
/// description file.
///
/// # Safety
/// `path` is null or a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qwbc_model_new(path: *const c_char, out: *mut *mut QwbcModel) -> QwbcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let model = match opt_str(path, "path")? {
            None => RobotModel::hyq_arm(),
            Some(p) => RobotModel::from_file(p).map_err(|e| Failure::new(QwbcStatus::Model, e.to_string()))?,
        };
        *out = Box::into_raw(Box::new(QwbcModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` is null or a handle from [`qwbc_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qwbc_model_free(model: *mut QwbcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Actuated joints (legs then arm); 0 for a null handle.
///
/// # Safety
/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwbc_model_n_joints(model: *const QwbcModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_joints())
}

/// Total mass in kg; 0 for a null handle.
///
/// # Safety
/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwbc_model_total_mass(model: *const QwbcModel) -> f64 {
    model.as_ref().map_or(0.0, |m| m.model.total_mass())
}

/// Home posture resting on the default ground. `q` holds `7 + n_joints`
/// values, `u` holds `6 + n_joints`.
///
/// # Safety
/// `model` is a live handle; `q` and `u` point to buffers of the given lengths.
#[no_mangle]
pub unsafe extern "C" fn qwbc_model_standing_state(
    model: *const QwbcModel,
    q: *mut f64,
    q_len: usize,
    u: *mut f64,
    u_len: usize,
) -> QwbcStatus {
    guard(|| {
        let m = &deref(model, "model")?.model;
        let nj = m.n_joints();
        let q = slice_mut(q, q_len, 7 + nj, "q")?;
        let u = slice_mut(u, u_len, 6 + nj, "u")?;
        let s = standing_state(m, &ContactParams::default())
            .map_err(|e| Failure::new(QwbcStatus::Simulation, e.to_string()))?;
        state_into(&s, q, u);
        Ok(())
    })
}

/// Controller with the preset impedance of the given base and arm mass
/// levels ([`QWBC_MASS_LOW`], [`QWBC_MASS_NOMINAL`] or [`QWBC_MASS_HIGH`])
/// and default weights. The desired pose is the model's standing state until
/// [`qwbc_controller_hold`] is called.
///
/// # Safety
/// `model` is a live handle and `out` a valid pointer. The controller keeps
/// its own copy of the model.
#[no_mangle]
pub unsafe extern "C" fn qwbc_controller_new(
    model: *const QwbcModel,
    base_mass: i32,
    arm_mass: i32,
    out: *mut *mut QwbcController,
) -> QwbcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let model = deref(model, "model")?.model.clone();
        let need = |v: i32, what: &str| {
            level(v, what)?.ok_or_else(|| Failure::new(QwbcStatus::InvalidArgument, format!("{what} must name a level")))
        };
        let settings = ImpedancePresets::default()
            .settings(need(base_mass, "base_mass")?, need(arm_mass, "arm_mass")?)
            .map_err(|e| Failure::new(QwbcStatus::Controller, e.to_string()))?;
        let controller = WbcController::new(&model, settings, WbcConfig::default())
            .map_err(|e| Failure::new(QwbcStatus::Controller, e.to_string()))?;
        let home = standing_state(&model, &ContactParams::default())
            .map_err(|e| Failure::new(QwbcStatus::Simulation, e.to_string()))?;
        let desired = Desireds::hold(&model, &home, controller.frames().ee);
        *out = Box::into_raw(Box::new(QwbcController {
            model,
            controller,
            desired,
        }));
        Ok(())
    })
}

/// # Safety
/// `ctrl` is null or a handle from [`qwbc_controller_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qwbc_controller_free(ctrl: *mut QwbcController) {
    if !ctrl.is_null() {
        drop(Box::from_raw(ctrl));
    }
}

/// Makes the pose of the given state the impedance rest pose.
///
/// # Safety
/// `ctrl` is a live handle; `q` and `u` point to buffers of the given lengths.
#[no_mangle]
pub unsafe extern "C" fn qwbc_controller_hold(
    ctrl: *mut QwbcController,
    q: *const f64,
    q_len: usize,
    u: *const f64,
    u_len: usize,
) -> QwbcStatus {
    guard(|| {
        let c = deref_mut(ctrl, "ctrl")?;
        let nj = c.model.n_joints();
        let s = state_from(&c.model, slice(q, q_len, 7 + nj, "q")?, slice(u, u_len, 6 + nj, "u")?)?;
        c.desired = Desireds::hold(&c.model, &s, c.controller.frames().ee);
        Ok(())
    })
}

/// One control tick.
///
/// `stance` holds 4 flags in LF, RF, LH, RH order; `swing_accel` holds 12
/// base-frame foot accelerations read for swing legs; `fe` is the measured
/// end-effector force and `base_accel` the measured trunk acceleration
/// (either may be null for zero). Joint torques go to `tau`
/// (`n_joints` values). An unsolved QP is not an error: the previous torques
/// are returned and `info->held` is set.
///
/// # Safety
/// `ctrl` is a live handle, array arguments point to buffers of the stated
/// sizes and `info` is null or valid.
#[no_mangle]
pub unsafe extern "C" fn qwbc_controller_step(
    ctrl: *mut QwbcController,
    q: *const f64,
    q_len: usize,
    u: *const f64,
    u_len: usize,
    stance: *const u8,
    swing_accel: *const f64,
    fe: *const f64,
    base_accel: *const f64,
    tau: *mut f64,
    tau_len: usize,
    info: *mut QwbcStepInfo,
) -> QwbcStatus {
    guard(|| {
        let c = deref_mut(ctrl, "ctrl")?;
        let nj = c.model.n_joints();
        let state = state_from(&c.model, slice(q, q_len, 7 + nj, "q")?, slice(u, u_len, 6 + nj, "u")?)?;
        if stance.is_null() {
            return Err(Failure::new(QwbcStatus::NullPointer, "stance is null"));
        }
        let flags = std::slice::from_raw_parts(stance, 4);
        let stance = [flags[0] != 0, flags[1] != 0, flags[2] != 0, flags[3] != 0];
        let mut swing = [Vector3::zeros(); 4];
        if !swing_accel.is_null() {
            let a = std::slice::from_raw_parts(swing_accel, 12);
            for (l, s) in swing.iter_mut().enumerate() {
                *s = Vector3::new(a[3 * l], a[3 * l + 1], a[3 * l + 2]);
            }
        }
        let vec3 = |p: *const f64| {
            if p.is_null() {
                Vector3::zeros()
            } else {
                let a = std::slice::from_raw_parts(p, 3);
                Vector3::new(a[0], a[1], a[2])
            }
        };
        let tau = slice_mut(tau, tau_len, nj, "tau")?;
        let input = WbcInput {
            model: &c.model,
            state: &state,
            base_acceleration: vec3(base_accel),
            stance,
            swing_accel: swing,
            desired: &c.desired,
            fe: vec3(fe),
        };
        let out = c
            .controller
            .control_step(&input)
            .map_err(|e| Failure::new(QwbcStatus::Controller, e.to_string()))?;
        tau.copy_from_slice(out.tau.as_slice());
        if let Some(info) = info.as_mut() {
            let d = &out.diagnostics;
            *info = QwbcStepInfo {
                optimal: u8::from(d.status == QpStatus::Optimal),
                held: u8::from(d.held),
                iterations: d.iterations,
                max_residual: d.residuals.max(),
            };
        }
        Ok(())
    })
}

/// Runs a scenario family (`stand-step-base-inertia`, `stand-step-arm-inertia`,
/// `stand-chirp` or `trot`). Selectors take a mass level or [`QWBC_ALL`];
/// `gp` is 1..=4 or [`QWBC_ALL`]. `config_path` (TOML) and `out_dir` (per-run
/// CSV logs) may be null.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_new(
    scenario: *const c_char,
    mass: i32,
    gp: i32,
    ee_inertia: i32,
    config_path: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut QwbcRun,
) -> QwbcStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let kind = opt_str(scenario, "scenario")?
            .ok_or_else(|| Failure::new(QwbcStatus::NullPointer, "scenario is null"))?
            .parse()?;
        let gp = match gp {
            QWBC_ALL => None,
            g if g >= 0 => Some(g as usize),
            g => return Err(Failure::new(QwbcStatus::InvalidArgument, format!("gp: invalid value {g}"))),
        };
        let sel = Selection {
            mass: level(mass, "mass")?,
            gp,
            ee_inertia: level(ee_inertia, "ee_inertia")?,
        };
        let cfg = match opt_str(config_path, "config_path")? {
            Some(p) => ExperimentConfig::load(Path::new(p))?,
            None => ExperimentConfig::default(),
        };
        let scenarios = cfg.scenarios(kind, &sel)?;
        let dir = opt_str(out_dir, "out_dir")?.map(Path::new);
        let results = run_all(&cfg, &scenarios, dir)?;
        let mut buf = Vec::new();
        emit_summary(&mut buf, &results)?;
        let summary = CString::new(buf).map_err(|e| Failure::new(QwbcStatus::Io, e.to_string()))?;
        let names = results
            .iter()
            .map(|r| CString::new(r.scenario.name.clone()).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(QwbcRun {
            results,
            names,
            summary,
        }));
        Ok(())
    })
}

/// # Safety
/// `run` is null or a handle from [`qwbc_run_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_free(run: *mut QwbcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of scenarios in the run; 0 for a null handle.
///
/// # Safety
/// `run` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_len(run: *const QwbcRun) -> usize {
    run.as_ref().map_or(0, |r| r.results.len())
}

/// Name of scenario `index`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `run` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_name(run: *const QwbcRun, index: usize) -> *const c_char {
    run.as_ref()
        .and_then(|r| r.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Summary table as CSV text, one row per scenario. Owned by the handle.
///
/// # Safety
/// `run` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_summary_csv(run: *const QwbcRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// Template-relative RMS tracking errors (m) of scenario `index`, plus the
/// count of ticks violating a hard constraint.
///
/// # Safety
/// `run` is a live handle; output pointers are null or valid.
#[no_mangle]
pub unsafe extern "C" fn qwbc_run_tracking(
    run: *const QwbcRun,
    index: usize,
    rms_base: *mut f64,
    rms_ee: *mut f64,
    violations: *mut usize,
) -> QwbcStatus {
    guard(|| {
        let r = deref(run, "run")?;
        let res = r.results.get(index).ok_or_else(|| {
            Failure::new(QwbcStatus::InvalidArgument, format!("index {index} out of range ({})", r.results.len()))
        })?;
        let m = &res.metrics;
        if let Some(p) = rms_base.as_mut() {
            *p = m.rms_base;
        }
        if let Some(p) = rms_ee.as_mut() {
            *p = m.rms_ee;
        }
        if let Some(p) = violations.as_mut() {
            *p = m.violations;
        }
        Ok(())
    })
}
