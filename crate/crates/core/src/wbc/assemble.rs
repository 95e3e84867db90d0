use std::ops::Range;

use nalgebra::{DMatrix, DVector, Vector6};

use crate::dynamics::{
    frame_jacobian_in_base, gravity, jacobian_dot_u_in_base, DynamicsQuantities, GeneralizedState, JacobianRows,
    Kinematics, RobotModel,
};
use crate::qp::{QpProblem, INFINITY};
use crate::template::{ImpedanceSettings, Vec3};

use super::tasks::{acceleration_bounds, desired_arm_accel, desired_base_wrench, ArmTask, Desireds, TaskState};
use super::{WbcConfig, WbcError};

/// Frame indices the controller works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlFrames {
    /// Feet in `Leg::ALL` order.
    pub feet: [usize; 4],
    pub ee: usize,
}

impl ControlFrames {
    pub fn new(model: &RobotModel) -> Result<Self, WbcError> {
        let f = |n: &str| model.frame_index(n).map_err(|_| WbcError::MissingFrame(n.to_string()));
        Ok(Self {
            feet: [f("LF")?, f("RF")?, f("LH")?, f("RH")?],
            ee: f("E")?,
        })
    }
}

/// Everything the controller reads at one tick.
#[derive(Debug, Clone)]
pub struct WbcInput<'a> {
    pub model: &'a RobotModel,
    pub state: &'a GeneralizedState,
    /// Measured trunk linear acceleration, world frame.
    pub base_acceleration: Vec3,
    /// Stance flags in `Leg::ALL` order.
    pub stance: [bool; 4],
    /// Desired base-relative foot accelerations (base frame); read for swing
    /// legs only.
    pub swing_accel: [Vec3; 4],
    pub desired: &'a Desireds,
    /// Measured end-effector force, world frame.
    pub fe: Vec3,
}

/// Decision-vector and row bookkeeping of an assembled problem.
///
/// Variables are `[udot; F_g; s]`. Inequality rows are stacked swing (two
/// one-sided rows per component), slack positivity, friction (four pyramid
/// faces then lower and upper normal bound, per stance foot), joint
/// acceleration and torque.
#[derive(Debug, Clone, PartialEq)]
pub struct QpLayout {
    pub dof: usize,
    pub n_joints: usize,
    pub stance_legs: Vec<usize>,
    pub swing_legs: Vec<usize>,
    pub forces: Range<usize>,
    pub slacks: Range<usize>,
    pub eq_physical: Range<usize>,
    pub eq_stance: Range<usize>,
    pub swing: Range<usize>,
    pub slack_positivity: Range<usize>,
    pub friction: Range<usize>,
    pub joint_accel: Range<usize>,
    pub torque: Range<usize>,
}

impl QpLayout {
    fn new(model: &RobotModel, stance: &[bool; 4]) -> Self {
        let dof = model.dof();
        let nj = model.n_joints();
        let stance_legs: Vec<usize> = (0..4).filter(|&i| stance[i]).collect();
        let swing_legs: Vec<usize> = (0..4).filter(|&i| !stance[i]).collect();
        let nc = stance_legs.len();
        let nsw = swing_legs.len();
        let forces = dof..dof + 3 * nc;
        let slacks = forces.end..forces.end + 3 * nsw;
        let eq_physical = 0..6;
        let eq_stance = 6..6 + 3 * nc;
        let swing = 0..6 * nsw;
        let slack_positivity = swing.end..swing.end + 3 * nsw;
        let friction = slack_positivity.end..slack_positivity.end + 6 * nc;
        let joint_accel = friction.end..friction.end + nj;
        let torque = joint_accel.end..joint_accel.end + nj;
        Self {
            dof,
            n_joints: nj,
            stance_legs,
            swing_legs,
            forces,
            slacks,
            eq_physical,
            eq_stance,
            swing,
            slack_positivity,
            friction,
            joint_accel,
            torque,
        }
    }

    pub fn n(&self) -> usize {
        self.slacks.end
    }

    pub fn n_eq(&self) -> usize {
        self.eq_stance.end
    }

    pub fn n_ineq(&self) -> usize {
        self.torque.end
    }

    pub fn n_contacts(&self) -> usize {
        self.stance_legs.len()
    }
}

#[derive(Debug, Clone)]
pub struct AssembledQp {
    pub problem: QpProblem,
    pub layout: QpLayout,
    pub dynamics: DynamicsQuantities,
    pub desired_wrench: Vector6<f64>,
    pub arm: ArmTask,
    /// Rows mapping the decision vector to the rendered base wrench.
    pub wrench_map: DMatrix<f64>,
}

/// Builds the whole-body QP for one tick.
pub fn assemble_qp(
    input: &WbcInput,
    frames: &ControlFrames,
    settings: &ImpedanceSettings,
    cfg: &WbcConfig,
) -> Result<AssembledQp, WbcError> {
    let model = input.model;
    let state = input.state;
    if !input.stance.iter().any(|s| *s) {
        return Err(WbcError::NoContact);
    }
    state.validate(model).map_err(WbcError::State)?;
    let layout = QpLayout::new(model, &input.stance);
    let dof = layout.dof;
    let nj = layout.n_joints;
    let nl = model.n_leg();
    let na = model.n_arm();
    let n = layout.n();
    let nc = layout.n_contacts();

    let stance_frames: Vec<usize> = layout.stance_legs.iter().map(|&l| frames.feet[l]).collect();
    let dq = DynamicsQuantities::compute(model, state, &gravity(), &stance_frames, frames.ee);
    let kin: &Kinematics = &dq.kinematics;
    let measured = TaskState::measure(model, state, kin, frames.ee);
    let wrench = desired_base_wrench(&measured, input.desired, settings);
    let arm = desired_arm_accel(
        model,
        state,
        &dq.mass_matrix,
        &measured,
        &input.base_acceleration,
        input.desired,
        &input.fe,
        settings,
        cfg,
        frames.ee,
    );
    let m = &dq.mass_matrix;

    // cost
    let mut wrench_map = DMatrix::zeros(6, n);
    for k in 0..3 {
        wrench_map[(k, k)] = settings.base.mass[k];
    }
    wrench_map.view_mut((3, 3), (3, 3)).copy_from(&m.view((3, 3), (3, 3)));
    let qb = DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.base_weight));
    let mut h = wrench_map.transpose() * &qb * &wrench_map;
    let mut g = -(wrench_map.transpose() * &qb * wrench);
    for i in 0..na {
        let k = 6 + nl + i;
        h[(k, k)] += cfg.arm_weight;
        g[k] -= cfg.arm_weight * arm.qdd_desired[i];
    }
    for i in 0..n {
        h[(i, i)] += if i < dof {
            cfg.accel_regularization
        } else if layout.forces.contains(&i) {
            cfg.force_regularization
        } else {
            cfg.slack_weight
        };
    }
    for i in layout.slacks.clone() {
        g[i] += cfg.slack_linear_weight;
    }
    let h = (&h + h.transpose()) * 0.5;

    // equalities
    let js = &dq.stance_jacobian;
    let mut a = DMatrix::zeros(layout.n_eq(), n);
    let mut b = DVector::zeros(layout.n_eq());
    a.view_mut((0, 0), (6, dof)).copy_from(&m.rows(0, 6));
    a.view_mut((0, layout.forces.start), (6, 3 * nc)).copy_from(&(-js.columns(0, 6).transpose()));
    let je = &dq.ee_jacobian;
    let je_fe = je.transpose() * input.fe;
    for k in 0..6 {
        b[k] = -dq.bias[k] + je_fe[k];
    }
    a.view_mut((6, 0), (3 * nc, dof)).copy_from(js);
    b.rows_mut(6, 3 * nc).copy_from(&(-&dq.stance_jdot_u));

    // inequalities
    let mi = layout.n_ineq();
    let mut c = DMatrix::zeros(mi, n);
    let mut lo = DVector::from_element(mi, -INFINITY);
    let mut hi = DVector::from_element(mi, INFINITY);

    for (k, &leg) in layout.swing_legs.iter().enumerate() {
        let foot = frames.feet[leg];
        let jrel = frame_jacobian_in_base(model, state, foot, JacobianRows::Translational);
        let jdot = jacobian_dot_u_in_base(model, state, foot);
        let target = input.swing_accel[leg] - jdot.fixed_rows::<3>(0);
        for r in 0..3 {
            let upper_row = layout.swing.start + 6 * k + r;
            let lower_row = upper_row + 3;
            let s_col = layout.slacks.start + 3 * k + r;
            for j in 0..nl {
                c[(upper_row, 6 + j)] = jrel[(r, j)];
                c[(lower_row, 6 + j)] = jrel[(r, j)];
            }
            c[(upper_row, s_col)] = -1.0;
            hi[upper_row] = target[r];
            c[(lower_row, s_col)] = 1.0;
            lo[lower_row] = target[r];
            let pos = layout.slack_positivity.start + 3 * k + r;
            c[(pos, s_col)] = 1.0;
            lo[pos] = 0.0;
        }
    }

    let mu = cfg.friction_coefficient;
    for k in 0..nc {
        let row = layout.friction.start + 6 * k;
        let fx = layout.forces.start + 3 * k;
        let (fy, fz) = (fx + 1, fx + 2);
        for (face, (col, sign)) in [(fx, 1.0), (fx, -1.0), (fy, 1.0), (fy, -1.0)].into_iter().enumerate() {
            c[(row + face, col)] = sign;
            c[(row + face, fz)] = -mu;
            hi[row + face] = 0.0;
        }
        c[(row + 4, fz)] = 1.0;
        lo[row + 4] = cfg.min_normal_force;
        c[(row + 5, fz)] = 1.0;
        hi[row + 5] = cfg.max_normal_force;
    }

    let (qdd_lo, qdd_hi) =
        acceleration_bounds(&state.joint_positions, &state.joint_velocities, model.limits(), cfg.limit_horizon);
    for j in 0..nj {
        let row = layout.joint_accel.start + j;
        c[(row, 6 + j)] = 1.0;
        lo[row] = qdd_lo[j];
        hi[row] = qdd_hi[j];
    }

    for j in 0..nj {
        let row = layout.torque.start + j;
        for col in 0..dof {
            c[(row, col)] = m[(6 + j, col)];
        }
        for r in 0..3 * nc {
            c[(row, layout.forces.start + r)] = -js[(r, 6 + j)];
        }
        let offset = -dq.bias[6 + j] + je_fe[6 + j];
        lo[row] = model.limits()[j].tau_min + offset;
        hi[row] = model.limits()[j].tau_max + offset;
    }

    Ok(AssembledQp {
        problem: QpProblem {
            h,
            g,
            a,
            b,
            c,
            lower: lo,
            upper: hi,
        },
        layout,
        dynamics: dq,
        desired_wrench: wrench,
        arm,
        wrench_map,
    })
}

/// Joint torques realizing `udot` with ground forces `forces` (stacked per
/// stance foot) and end-effector force `fe`:
/// `tau = M_j udot + h_j - J_st,j^T F_g - J_e,j^T F_e`.
pub fn map_torques(udot: &DVector<f64>, forces: &DVector<f64>, fe: &Vec3, dq: &DynamicsQuantities) -> DVector<f64> {
    let dof = udot.len();
    let nj = dof - 6;
    let mj = dq.mass_matrix.rows(6, nj);
    let mut tau = mj * udot + dq.bias.rows(6, nj);
    if !forces.is_empty() {
        tau -= dq.stance_jacobian.columns(6, nj).transpose() * forces;
    }
    tau -= dq.ee_jacobian.columns(6, nj).transpose() * fe;
    tau
}

/// Largest violation (zero when satisfied) of each hard constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintViolations {
    pub equality: f64,
    pub friction: f64,
    pub normal: f64,
    pub joint_accel: f64,
    pub torque: f64,
    pub slack: f64,
}

impl ConstraintViolations {
    pub fn max_hard(&self) -> f64 {
        self.friction.max(self.normal).max(self.joint_accel).max(self.torque)
    }
}

/// Smallest distance to either bound across the hard inequality rows.
pub fn min_margin(p: &QpProblem, layout: &QpLayout, x: &DVector<f64>) -> f64 {
    let cx = &p.c * x;
    (layout.friction.start..layout.torque.end)
        .map(|i| (cx[i] - p.lower[i]).min(p.upper[i] - cx[i]))
        .fold(f64::INFINITY, f64::min)
}

pub fn constraint_violations(p: &QpProblem, layout: &QpLayout, x: &DVector<f64>) -> ConstraintViolations {
    let cx = &p.c * x;
    let viol = |range: Range<usize>, filter: &dyn Fn(usize) -> bool| {
        range
            .filter(|&i| filter(i))
            .map(|i| (p.lower[i] - cx[i]).max(cx[i] - p.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    };
    let fr = layout.friction.start;
    let face = |i: usize| (i - fr) % 6 < 4;
    ConstraintViolations {
        equality: (&p.a * x - &p.b).amax(),
        friction: viol(layout.friction.clone(), &face),
        normal: viol(layout.friction.clone(), &|i| !face(i)),
        joint_accel: viol(layout.joint_accel.clone(), &|_| true),
        torque: viol(layout.torque.clone(), &|_| true),
        slack: viol(layout.slack_positivity.clone(), &|_| true),
    }
}
