//! Floating-base rigid-body dynamics: composite-rigid-body mass matrix,
//! recursive Newton-Euler bias and inverse dynamics, frame Jacobians, their
//! velocity products and forward dynamics.
//!
//! All generalized quantities follow the velocity layout of
//! [`GeneralizedState::velocity`]: base linear, base angular (both world
//! frame), leg joints, arm joints. The base rows of a generalized force are
//! therefore the world-frame force and the world-frame moment about the trunk
//! origin.

pub mod model;
pub mod spatial;
pub mod state;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use model::{Frame, JointGroup, JointKind, JointLimits, Link, ModelError, RobotModel};
pub use state::{GeneralizedState, StateError};

use spatial::{
    angular, cross_force, cross_motion, joint_rotation, linear, skew, spatial, Mat3, SpatialMat, SpatialVec,
    Transform, Vec3,
};

pub const STANDARD_GRAVITY: f64 = 9.81;

pub fn gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

/// Which rows of a frame Jacobian to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianRows {
    /// Linear velocity of the frame point (3 rows).
    Translational,
    /// Linear then angular velocity (6 rows).
    Full,
}

impl JacobianRows {
    pub fn count(self) -> usize {
        match self {
            JacobianRows::Translational => 3,
            JacobianRows::Full => 6,
        }
    }
}

/// Link placements for one configuration.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// Parent-to-link transforms; entry 0 maps world to trunk.
    pub x_up: Vec<Transform>,
    /// World ← link rotations.
    pub rot: Vec<Mat3>,
    /// Link origins in world coordinates.
    pub pos: Vec<Vec3>,
    /// Joint axes (link coordinates); zero for the trunk.
    pub axis: Vec<Vec3>,
}

impl Kinematics {
    pub fn new(model: &RobotModel, state: &GeneralizedState) -> Self {
        let n = model.n_links();
        let r0 = *state.base_orientation.to_rotation_matrix().matrix();
        let mut x_up = Vec::with_capacity(n);
        let mut rot = Vec::with_capacity(n);
        let mut pos = Vec::with_capacity(n);
        let mut axis = Vec::with_capacity(n);
        x_up.push(Transform::new(r0.transpose(), state.base_position));
        rot.push(r0);
        pos.push(state.base_position);
        axis.push(Vec3::zeros());
        for (i, link) in model.links().iter().enumerate().skip(1) {
            let p = link.parent.expect("non-root link has a parent");
            let JointKind::Revolute { axis: a } = link.kind else {
                unreachable!("only the root is floating")
            };
            let xj = Transform::new(joint_rotation(&a, state.joint_positions[i - 1]), Vec3::zeros());
            let x = link.tree.then(&xj);
            rot.push(rot[p] * x.rot.transpose());
            pos.push(pos[p] + rot[p] * x.pos);
            x_up.push(x);
            axis.push(a);
        }
        Self { x_up, rot, pos, axis }
    }

    pub fn frame_position(&self, model: &RobotModel, frame: usize) -> Vec3 {
        let f = model.frame(frame);
        self.pos[f.link] + self.rot[f.link] * f.offset
    }

    pub fn frame_rotation(&self, model: &RobotModel, frame: usize) -> Mat3 {
        self.rot[model.frame(frame).link]
    }

    /// Whole-body center of mass, world frame.
    pub fn center_of_mass(&self, model: &RobotModel) -> Vec3 {
        let mut acc = Vec3::zeros();
        for (i, link) in model.links().iter().enumerate() {
            acc += (self.pos[i] + self.rot[i] * link.com) * link.mass;
        }
        acc / model.total_mass()
    }
}

fn joint_subspace(axis: &Vec3) -> SpatialVec {
    spatial(axis, &Vec3::zeros())
}

/// Trunk spatial velocity in trunk coordinates from world-frame base rates.
fn base_spatial_velocity(r0: &Mat3, v: &Vec3, w: &Vec3) -> SpatialVec {
    spatial(&(r0.transpose() * w), &(r0.transpose() * v))
}

/// Maps a trunk-coordinate spatial force to the six base rows of a
/// generalized force.
fn base_generalized_force(r0: &Mat3, f: &SpatialVec) -> [f64; 6] {
    let fl = r0 * linear(f);
    let n = r0 * angular(f);
    [fl.x, fl.y, fl.z, n.x, n.y, n.z]
}

/// Recursive Newton-Euler inverse dynamics: generalized forces that produce
/// `udot` at `state` under `gravity`, with `external` spatial forces (link
/// coordinates, one per link) acting on the links.
fn rnea(
    model: &RobotModel,
    kin: &Kinematics,
    state: &GeneralizedState,
    udot: &DVector<f64>,
    gravity: &Vec3,
    external: Option<&[SpatialVec]>,
) -> DVector<f64> {
    let n = model.n_links();
    let r0 = kin.rot[0];
    let v_lin = state.base_linear_velocity;
    let w = state.base_angular_velocity;
    let mut v = vec![SpatialVec::zeros(); n];
    let mut a = vec![SpatialVec::zeros(); n];
    let mut f = vec![SpatialVec::zeros(); n];

    v[0] = base_spatial_velocity(&r0, &v_lin, &w);
    let acc_lin: Vec3 = udot.fixed_rows::<3>(0).into_owned();
    let acc_ang: Vec3 = udot.fixed_rows::<3>(3).into_owned();
    let wb = angular(&v[0]);
    let vb = linear(&v[0]);
    a[0] = spatial(
        &(r0.transpose() * acc_ang),
        &(r0.transpose() * (acc_lin - gravity) - wb.cross(&vb)),
    );

    for i in 1..n {
        let p = model.links()[i].parent.expect("parent");
        let s = joint_subspace(&kin.axis[i]);
        let qd = state.joint_velocities[i - 1];
        let qdd = udot[5 + i];
        let x = &kin.x_up[i];
        v[i] = x.apply_motion(&v[p]) + s * qd;
        a[i] = x.apply_motion(&a[p]) + s * qdd + cross_motion(&v[i], &(s * qd));
    }
    for i in 0..n {
        let inertia = &model.links()[i].inertia;
        f[i] = inertia * a[i] + cross_force(&v[i], &(inertia * v[i]));
        if let Some(ext) = external {
            f[i] -= ext[i];
        }
    }

    let mut tau = DVector::zeros(model.dof());
    for i in (1..n).rev() {
        tau[5 + i] = joint_subspace(&kin.axis[i]).dot(&f[i]);
        let p = model.links()[i].parent.expect("parent");
        let back = kin.x_up[i].inv_apply_force(&f[i]);
        f[p] += back;
    }
    let base = base_generalized_force(&r0, &f[0]);
    for (k, val) in base.iter().enumerate() {
        tau[k] = *val;
    }
    tau
}

/// Converts world-frame point forces at frames into per-link spatial forces.
fn link_forces(model: &RobotModel, kin: &Kinematics, external: &[(usize, Vec3)]) -> Vec<SpatialVec> {
    let mut out = vec![SpatialVec::zeros(); model.n_links()];
    for (frame, force) in external {
        let fr = model.frame(*frame);
        let fl = kin.rot[fr.link].transpose() * force;
        out[fr.link] += spatial(&fr.offset.cross(&fl), &fl);
    }
    out
}

/// Generalized forces `M udot + h - sum J^T F` for world-frame point forces
/// `external` applied at the given frames.
pub fn inverse_dynamics(
    model: &RobotModel,
    state: &GeneralizedState,
    udot: &DVector<f64>,
    gravity: &Vec3,
    external: &[(usize, Vec3)],
) -> DVector<f64> {
    let kin = Kinematics::new(model, state);
    let ext = link_forces(model, &kin, external);
    rnea(model, &kin, state, udot, gravity, Some(&ext))
}

/// Coriolis, centrifugal and gravity terms.
pub fn bias_vector(model: &RobotModel, state: &GeneralizedState, gravity: &Vec3) -> DVector<f64> {
    let kin = Kinematics::new(model, state);
    rnea(model, &kin, state, &DVector::zeros(model.dof()), gravity, None)
}

/// Joint-space inertia matrix by the composite-rigid-body algorithm.
pub fn mass_matrix(model: &RobotModel, state: &GeneralizedState) -> DMatrix<f64> {
    mass_matrix_with(model, &Kinematics::new(model, state))
}

fn mass_matrix_with(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let n = model.n_links();
    let dof = model.dof();
    let mut ic: Vec<SpatialMat> = model.links().iter().map(|l| l.inertia).collect();
    for i in (1..n).rev() {
        let p = model.links()[i].parent.expect("parent");
        let x = kin.x_up[i].motion_matrix();
        let contrib = x.transpose() * ic[i] * x;
        ic[p] += contrib;
    }

    // base motion subspace: [ang; lin] body rates from [v; w] world rates
    let r0 = kin.rot[0];
    let mut s0 = nalgebra::Matrix6::<f64>::zeros();
    s0.fixed_view_mut::<3, 3>(0, 3).copy_from(&r0.transpose());
    s0.fixed_view_mut::<3, 3>(3, 0).copy_from(&r0.transpose());

    let mut m = DMatrix::zeros(dof, dof);
    let mbb = s0.transpose() * ic[0] * s0;
    m.view_mut((0, 0), (6, 6)).copy_from(&mbb);

    for i in 1..n {
        let vi = 5 + i;
        let si = joint_subspace(&kin.axis[i]);
        let mut force = ic[i] * si;
        m[(vi, vi)] = si.dot(&force);
        let mut j = i;
        loop {
            force = kin.x_up[j].inv_apply_force(&force);
            j = model.links()[j].parent.expect("parent");
            if j == 0 {
                let col = s0.transpose() * force;
                for k in 0..6 {
                    m[(vi, k)] = col[k];
                    m[(k, vi)] = col[k];
                }
                break;
            }
            let vj = 5 + j;
            let val = joint_subspace(&kin.axis[j]).dot(&force);
            m[(vi, vj)] = val;
            m[(vj, vi)] = val;
        }
    }
    m
}

/// World-frame Jacobian of a frame point (linear rows first).
pub fn frame_jacobian(
    model: &RobotModel,
    state: &GeneralizedState,
    frame: usize,
    rows: JacobianRows,
) -> DMatrix<f64> {
    frame_jacobian_with(model, &Kinematics::new(model, state), frame, rows)
}

pub fn frame_jacobian_with(model: &RobotModel, kin: &Kinematics, frame: usize, rows: JacobianRows) -> DMatrix<f64> {
    let fr = model.frame(frame);
    let point = kin.frame_position(model, frame);
    let mut j = DMatrix::zeros(rows.count(), model.dof());
    let full = rows == JacobianRows::Full;
    let r = point - kin.pos[0];
    for k in 0..3 {
        j[(k, k)] = 1.0;
    }
    j.view_mut((0, 3), (3, 3)).copy_from(&(-skew(&r)));
    if full {
        for k in 0..3 {
            j[(3 + k, 3 + k)] = 1.0;
        }
    }
    for l in model.ancestors(fr.link) {
        if l == 0 {
            break;
        }
        let col = 5 + l;
        let a = kin.rot[l] * kin.axis[l];
        let lin = a.cross(&(point - kin.pos[l]));
        j.view_mut((0, col), (3, 1)).copy_from(&lin);
        if full {
            j.view_mut((3, col), (3, 1)).copy_from(&a);
        }
    }
    j
}

/// Joint-column Jacobian of a frame relative to the trunk, in trunk
/// coordinates. Columns cover all actuated joints (`rows x n_joints`).
pub fn frame_jacobian_in_base(
    model: &RobotModel,
    state: &GeneralizedState,
    frame: usize,
    rows: JacobianRows,
) -> DMatrix<f64> {
    let kin = Kinematics::new(model, state);
    let jw = frame_jacobian_with(model, &kin, frame, rows);
    let rt = kin.rot[0].transpose();
    let nj = model.n_joints();
    let mut out = DMatrix::zeros(rows.count(), nj);
    for blk in 0..rows.count() / 3 {
        let rows_w = jw.view((3 * blk, 6), (3, nj));
        out.view_mut((3 * blk, 0), (3, nj)).copy_from(&(rt * rows_w));
    }
    out
}

/// Frame acceleration at zero generalized acceleration, `Jdot u`, world frame,
/// linear rows first.
pub fn jacobian_dot_u(model: &RobotModel, state: &GeneralizedState, frame: usize) -> nalgebra::Vector6<f64> {
    let kin = Kinematics::new(model, state);
    jacobian_dot_u_with(model, &kin, state, frame)
}

pub fn jacobian_dot_u_with(
    model: &RobotModel,
    kin: &Kinematics,
    state: &GeneralizedState,
    frame: usize,
) -> nalgebra::Vector6<f64> {
    let fr = model.frame(frame);
    let chain: Vec<usize> = {
        let mut c: Vec<usize> = model.ancestors(fr.link).collect();
        c.reverse();
        c
    };
    let r0 = kin.rot[0];
    let mut v = base_spatial_velocity(&r0, &state.base_linear_velocity, &state.base_angular_velocity);
    let wb = angular(&v);
    let vb = linear(&v);
    let mut a = spatial(&Vec3::zeros(), &(-wb.cross(&vb)));
    for &l in chain.iter().skip(1) {
        let s = joint_subspace(&kin.axis[l]);
        let qd = state.joint_velocities[l - 1];
        let x = &kin.x_up[l];
        v = x.apply_motion(&v) + s * qd;
        a = x.apply_motion(&a) + cross_motion(&v, &(s * qd));
    }
    let w = angular(&v);
    let alpha = angular(&a);
    let r = fr.offset;
    let vp = linear(&v) + w.cross(&r);
    let acc = linear(&a) + alpha.cross(&r) + w.cross(&vp);
    let rl = kin.rot[fr.link];
    let lin = rl * acc;
    let ang = rl * alpha;
    nalgebra::Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

/// `Jdot qdot` of a frame relative to the trunk, trunk coordinates.
pub fn jacobian_dot_u_in_base(
    model: &RobotModel,
    state: &GeneralizedState,
    frame: usize,
) -> nalgebra::Vector6<f64> {
    jacobian_dot_u(model, &state.with_fixed_base(), frame)
}

/// Frame point velocity (linear, angular) in world coordinates.
pub fn frame_velocity(model: &RobotModel, state: &GeneralizedState, frame: usize) -> nalgebra::Vector6<f64> {
    let j = frame_jacobian(model, state, frame, JacobianRows::Full);
    let v = j * state.velocity();
    nalgebra::Vector6::from_column_slice(v.as_slice())
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("mass matrix is not positive definite")]
    Singular,
}

/// Generalized accelerations solving `M udot + h = [0; tau] + sum J^T F`.
pub fn forward_dynamics(
    model: &RobotModel,
    state: &GeneralizedState,
    tau: &DVector<f64>,
    external: &[(usize, Vec3)],
    gravity: &Vec3,
) -> Result<DVector<f64>, DynamicsError> {
    assert_eq!(tau.len(), model.n_joints(), "actuation vector length");
    let kin = Kinematics::new(model, state);
    let ext = link_forces(model, &kin, external);
    let zero = DVector::zeros(model.dof());
    let c = rnea(model, &kin, state, &zero, gravity, Some(&ext));
    let mut rhs = -c;
    for (k, t) in tau.iter().enumerate() {
        rhs[6 + k] += t;
    }
    let m = mass_matrix_with(model, &kin);
    let chol = m.cholesky().ok_or(DynamicsError::Singular)?;
    Ok(chol.solve(&rhs))
}

/// Everything the controller needs from the model at one state.
#[derive(Debug, Clone)]
pub struct DynamicsQuantities {
    pub mass_matrix: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Stacked translational Jacobians of the stance feet, `3 n_c x dof`.
    pub stance_jacobian: DMatrix<f64>,
    /// Stacked `Jdot u` of the stance feet.
    pub stance_jdot_u: DVector<f64>,
    /// Translational end-effector Jacobian, `3 x dof`.
    pub ee_jacobian: DMatrix<f64>,
    pub kinematics: Kinematics,
}

impl DynamicsQuantities {
    pub fn compute(
        model: &RobotModel,
        state: &GeneralizedState,
        gravity: &Vec3,
        stance_frames: &[usize],
        ee_frame: usize,
    ) -> Self {
        let kin = Kinematics::new(model, state);
        let m = mass_matrix_with(model, &kin);
        let h = rnea(model, &kin, state, &DVector::zeros(model.dof()), gravity, None);
        let dof = model.dof();
        let mut js = DMatrix::zeros(3 * stance_frames.len(), dof);
        let mut jd = DVector::zeros(3 * stance_frames.len());
        for (k, &f) in stance_frames.iter().enumerate() {
            let j = frame_jacobian_with(model, &kin, f, JacobianRows::Translational);
            js.view_mut((3 * k, 0), (3, dof)).copy_from(&j);
            let a = jacobian_dot_u_with(model, &kin, state, f);
            jd.rows_mut(3 * k, 3).copy_from(&a.fixed_rows::<3>(0));
        }
        let je = frame_jacobian_with(model, &kin, ee_frame, JacobianRows::Translational);
        Self {
            mass_matrix: m,
            bias: h,
            stance_jacobian: js,
            stance_jdot_u: jd,
            ee_jacobian: je,
            kinematics: kin,
        }
    }
}

/// Rotation-vector of `r_desired * r_actual^T`, world frame.
pub fn rotation_error(r_desired: &Mat3, r_actual: &Mat3) -> Vec3 {
    spatial::rotation_log(&(r_desired * r_actual.transpose()))
}

/// Translational rows of a 6-row world Jacobian.
pub fn translational(j: &DMatrix<f64>) -> DMatrix<f64> {
    j.rows(0, 3).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(model: &RobotModel, rng: &mut ChaCha8Rng) -> GeneralizedState {
        let mut s = GeneralizedState::zero(model);
        s.base_position = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        s.base_orientation = nalgebra::UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..1.5));
        for v in s.joint_positions.iter_mut() {
            *v = rng.random_range(-1.5..1.5);
        }
        s.base_linear_velocity = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        s.base_angular_velocity = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for v in s.joint_velocities.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        s
    }

    fn single_body() -> RobotModel {
        "link base\n mass 92\n com 0.1 -0.05 0.02\n inertia 2 6 7 0.1 0 0\nend\njoint root\n type floating\n child base\nend\n"
            .parse()
            .unwrap()
    }

    #[test]
    fn point_mass_translational_block() {
        let m = single_body();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(&m, &mut rng);
        let mm = mass_matrix(&m, &s);
        let block = mm.view((0, 0), (3, 3));
        assert!((block - Mat3::identity() * 92.0).abs().max() < 1e-12);
    }

    #[test]
    fn gravity_only_bias_at_rest() {
        let m = RobotModel::hyq_arm();
        let mut s = GeneralizedState::home(&m, Vec3::new(0.0, 0.0, 0.6));
        s.joint_positions[3] = 0.3;
        let h = bias_vector(&m, &s, &gravity());
        assert!((h[2] - m.total_mass() * STANDARD_GRAVITY).abs() < 1e-9);
        assert!(h[0].abs() < 1e-9 && h[1].abs() < 1e-9);
        let h0 = bias_vector(&m, &s, &Vec3::zeros());
        assert!(h0.amax() < 1e-12);
    }

    #[test]
    fn gravity_moment_acts_at_center_of_mass() {
        let m = RobotModel::hyq_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = random_state(&m, &mut rng);
        s.set_velocity(&DVector::zeros(m.dof()));
        let h = bias_vector(&m, &s, &gravity());
        let c = Kinematics::new(&m, &s).center_of_mass(&m);
        let weight = Vec3::new(0.0, 0.0, m.total_mass() * STANDARD_GRAVITY);
        let moment = (c - s.base_position).cross(&weight);
        assert!((h.fixed_rows::<3>(3) - moment).amax() < 1e-9);
    }

    #[test]
    fn base_frame_jacobian_is_identity_block() {
        let m = RobotModel::hyq_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(&m, &mut rng);
        let b = m.frame_index("B").unwrap();
        let j = frame_jacobian(&m, &s, b, JacobianRows::Full);
        let left = j.view((0, 0), (6, 6));
        assert!((left - nalgebra::Matrix6::<f64>::identity()).abs().max() < 1e-15);
        assert!(j.view((0, 6), (6, m.n_joints())).amax() == 0.0);
        assert!(jacobian_dot_u(&m, &s, b).amax() < 1e-12);
    }

    #[test]
    fn zero_velocity_gives_zero_jdot_u() {
        let m = RobotModel::hyq_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = random_state(&m, &mut rng);
        s.set_velocity(&DVector::zeros(m.dof()));
        for f in 0..m.frames().len() {
            assert!(jacobian_dot_u(&m, &s, f).amax() < 1e-15);
        }
    }

    #[test]
    fn planar_two_link_centripetal_term() {
        // two unit links rotating about z, massless-ish point at the tip
        let text = "
link base
 mass 1
 inertia 1 1 1 0 0 0
end
link l1
 mass 1
 com 0.5 0 0
 inertia 0.1 0.1 0.1 0 0 0
end
link l2
 mass 1
 com 0.5 0 0
 inertia 0.1 0.1 0.1 0 0 0
end
joint root
 type floating
 child base
end
joint j1
 type revolute
 group arm
 parent base
 child l1
 axis 0 0 1
end
joint j2
 type revolute
 group arm
 parent l1
 child l2
 origin 1 0 0
 axis 0 0 1
end
frame tip
 link l2
 offset 1 0 0
end
";
        let m: RobotModel = text.parse().unwrap();
        let mut s = GeneralizedState::zero(&m);
        let (q1, q2, d1, d2) = (0.3_f64, 0.8_f64, 1.2_f64, -0.7_f64);
        s.joint_positions = DVector::from_vec(vec![q1, q2]);
        s.joint_velocities = DVector::from_vec(vec![d1, d2]);
        let tip = m.frame_index("tip").unwrap();
        let a = jacobian_dot_u(&m, &s, tip);
        // x = cos q1 + cos(q1+q2), y = sin q1 + sin(q1+q2)
        let s12 = q1 + q2;
        let d12 = d1 + d2;
        let ax = -q1.cos() * d1 * d1 - s12.cos() * d12 * d12;
        let ay = -q1.sin() * d1 * d1 - s12.sin() * d12 * d12;
        assert!((a[0] - ax).abs() < 1e-12, "{} vs {ax}", a[0]);
        assert!((a[1] - ay).abs() < 1e-12);
        assert!(a[2].abs() < 1e-12);
    }

    #[test]
    fn foot_and_arm_column_sparsity() {
        let m = RobotModel::hyq_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state(&m, &mut rng);
        let (nl, na) = (m.n_leg(), m.n_arm());
        for foot in ["LF", "RF", "LH", "RH"] {
            let j = frame_jacobian(&m, &s, m.frame_index(foot).unwrap(), JacobianRows::Full);
            assert_eq!(j.view((0, 6 + nl), (6, na)).amax(), 0.0);
        }
        let je = frame_jacobian(&m, &s, m.frame_index("E").unwrap(), JacobianRows::Full);
        assert_eq!(je.view((0, 6), (6, nl)).amax(), 0.0);
    }

    #[test]
    fn static_equilibrium_under_supporting_force() {
        let m = single_body();
        let s = GeneralizedState::zero(&m);
        let b = m.frame_index("B").unwrap();
        // force through the com so no moment results
        let text = "link base\n mass 5\n inertia 1 1 1 0 0 0\nend\njoint root\n type floating\n child base\nend\nframe E\n link base\nend\n";
        let one: RobotModel = text.parse().unwrap();
        let e = one.frame_index("E").unwrap();
        let weight = Vec3::new(0.0, 0.0, 5.0 * STANDARD_GRAVITY);
        let udot = forward_dynamics(&one, &GeneralizedState::zero(&one), &DVector::zeros(0), &[(e, weight)], &gravity()).unwrap();
        assert!(udot.amax() < 1e-12);
        // free fall: base accelerates with gravity
        let udot = forward_dynamics(&m, &s, &DVector::zeros(0), &[], &gravity()).unwrap();
        assert!((udot.fixed_rows::<3>(0) - gravity()).amax() < 1e-12);
        let _ = b;
    }
}
