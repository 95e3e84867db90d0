use nalgebra::{DMatrix, DVector, Matrix3, Vector6};

use crate::dynamics::spatial::skew;
use crate::dynamics::{
    frame_jacobian_in_base, frame_velocity, jacobian_dot_u_in_base, rotation_error, GeneralizedState, JacobianRows,
    JointLimits, Kinematics, RobotModel,
};
use crate::template::{ImpedanceSettings, Vec3};

use super::WbcConfig;

/// Set-points of the rendered impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct Desireds {
    pub xb: Vec3,
    pub vb: Vec3,
    /// World ← base.
    pub rotation: Matrix3<f64>,
    pub angular_velocity: Vec3,
    pub xbe: Vec3,
    pub vbe: Vec3,
    pub arm_posture: DVector<f64>,
}

impl Desireds {
    /// Holds the current pose of `state` with zero velocities.
    pub fn hold(model: &RobotModel, state: &GeneralizedState, ee_frame: usize) -> Self {
        let kin = Kinematics::new(model, state);
        let na = model.n_arm();
        Self {
            xb: state.base_position,
            vb: Vec3::zeros(),
            rotation: kin.rot[0],
            angular_velocity: Vec3::zeros(),
            xbe: kin.frame_position(model, ee_frame) - state.base_position,
            vbe: Vec3::zeros(),
            arm_posture: state.joint_positions.rows(model.n_leg(), na).into_owned(),
        }
    }
}

/// Measured trunk and end-effector quantities, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskState {
    pub xb: Vec3,
    pub vb: Vec3,
    pub rotation: Matrix3<f64>,
    pub angular_velocity: Vec3,
    pub xbe: Vec3,
    pub vbe: Vec3,
}

impl TaskState {
    pub fn measure(model: &RobotModel, state: &GeneralizedState, kin: &Kinematics, ee_frame: usize) -> Self {
        let ve = frame_velocity(model, state, ee_frame);
        Self {
            xb: state.base_position,
            vb: state.base_linear_velocity,
            rotation: kin.rot[0],
            angular_velocity: state.base_angular_velocity,
            xbe: kin.frame_position(model, ee_frame) - state.base_position,
            vbe: ve.fixed_rows::<3>(0) - state.base_linear_velocity,
        }
    }
}

/// Rotation vector of `R_desired R_actual^T`, world frame, norm at most pi.
pub fn orientation_error(r_desired: &Matrix3<f64>, r_actual: &Matrix3<f64>) -> Vec3 {
    rotation_error(r_desired, r_actual)
}

/// `[F_b^d; T_b^d]`: trunk spring-damper plus the reaction of the virtual arm
/// spring-damper, and an orientation PD.
pub fn desired_base_wrench(m: &TaskState, d: &Desireds, s: &ImpedanceSettings) -> Vector6<f64> {
    let f = s.base.stiffness.component_mul(&(d.xb - m.xb))
        + s.base.damping.component_mul(&(d.vb - m.vb))
        + s.ee.stiffness.component_mul(&(m.xbe - d.xbe))
        + s.ee.damping.component_mul(&(m.vbe - d.vbe));
    let t = s.rot_damping.component_mul(&(d.angular_velocity - m.angular_velocity))
        + s.rot_stiffness.component_mul(&orientation_error(&d.rotation, &m.rotation));
    Vector6::new(f.x, f.y, f.z, t.x, t.y, t.z)
}

/// Manipulability `sqrt(det(J J^T))`.
pub fn manipulability(j: &DMatrix<f64>) -> f64 {
    (j * j.transpose()).determinant().max(0.0).sqrt()
}

/// Damping applied by [`damped_pinv`]: zero above the manipulability
/// threshold, growing quadratically to `max_damping` at a singularity.
pub fn pinv_damping(w: f64, cfg: &WbcConfig) -> f64 {
    if w >= cfg.manipulability_threshold {
        0.0
    } else {
        let r = 1.0 - w / cfg.manipulability_threshold;
        cfg.max_damping * cfg.max_damping * r * r
    }
}

/// Inertia-weighted damped pseudo-inverse
/// `M^-1 J^T (J M^-1 J^T + lambda^2 I)^-1`.
pub fn damped_pinv(j: &DMatrix<f64>, m: &DMatrix<f64>, cfg: &WbcConfig) -> DMatrix<f64> {
    let lambda2 = pinv_damping(manipulability(j), cfg);
    let minv = m.clone().cholesky().expect("arm inertia block is positive definite").inverse();
    let mjt = &minv * j.transpose();
    let mut lam = j * &mjt;
    for i in 0..lam.nrows() {
        lam[(i, i)] += lambda2;
    }
    let inv = lam
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| lam.try_inverse())
        .unwrap_or_else(|| DMatrix::zeros(j.nrows(), j.nrows()));
    mjt * inv
}

/// Intermediate quantities of the arm acceleration task.
#[derive(Debug, Clone)]
pub struct ArmTask {
    pub qdd_desired: DVector<f64>,
    /// Base-frame translational Jacobian of the end-effector over the arm joints.
    pub jacobian: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    /// `R^T (a_e - a_b)` that the primary term reproduces.
    pub cartesian_target: Vec3,
    /// `Jdot qdot + R^T Rdot J qdot`, base frame.
    pub drift: Vec3,
}

/// Desired arm joint accelerations: the end-effector follows its template
/// acceleration relative to the measured trunk, with a posture PD projected
/// into the task null space.
#[allow(clippy::too_many_arguments)]
pub fn desired_arm_accel(
    model: &RobotModel,
    state: &GeneralizedState,
    mass_matrix: &DMatrix<f64>,
    measured: &TaskState,
    base_acceleration: &Vec3,
    d: &Desireds,
    fe: &Vec3,
    s: &ImpedanceSettings,
    cfg: &WbcConfig,
    ee_frame: usize,
) -> ArmTask {
    let nl = model.n_leg();
    let na = model.n_arm();
    let j_full = frame_jacobian_in_base(model, state, ee_frame, JacobianRows::Translational);
    let ja = j_full.columns(nl, na).into_owned();
    let qd_a = state.joint_velocities.rows(nl, na).into_owned();
    let jdot = jacobian_dot_u_in_base(model, state, ee_frame);
    let rt = measured.rotation.transpose();
    let w_body = rt * measured.angular_velocity;
    let jqd = &ja * &qd_a;
    let jqd = Vec3::new(jqd[0], jqd[1], jqd[2]);
    let drift = jdot.fixed_rows::<3>(0).into_owned() + skew(&w_body) * jqd;

    let wrench = s.ee.stiffness.component_mul(&(d.xbe - measured.xbe))
        + s.ee.damping.component_mul(&(d.vbe - measured.vbe))
        + fe;
    let ae = wrench.component_div(&s.ee.mass);
    let cartesian_target = rt * (ae - base_acceleration);
    let rhs = cartesian_target - drift;

    let ma = mass_matrix.view((6 + nl, 6 + nl), (na, na)).into_owned();
    let pinv = damped_pinv(&ja, &ma, cfg);
    let null = DMatrix::identity(na, na) - &pinv * &ja;
    let qa = state.joint_positions.rows(nl, na);
    let posture = (&d.arm_posture - qa) * cfg.posture_kp - &qd_a * cfg.posture_kd;
    let qdd_desired = &pinv * DVector::from_column_slice(rhs.as_slice()) + null * posture;
    ArmTask {
        qdd_desired,
        jacobian: ja,
        pinv,
        cartesian_target,
        drift,
    }
}

/// Joint acceleration bounds that bring each joint to rest at its limit
/// within `horizon`: `(2 / dt^2) (q_lim - q - dt qd)`.
pub fn acceleration_bounds(
    q: &DVector<f64>,
    qd: &DVector<f64>,
    limits: &[JointLimits],
    horizon: f64,
) -> (DVector<f64>, DVector<f64>) {
    assert!(horizon > 0.0, "horizon must be positive");
    let k = 2.0 / (horizon * horizon);
    let n = q.len();
    let lo = DVector::from_fn(n, |i, _| k * (limits[i].q_min - q[i] - horizon * qd[i]));
    let hi = DVector::from_fn(n, |i, _| k * (limits[i].q_max - q[i] - horizon * qd[i]));
    (lo, hi)
}
