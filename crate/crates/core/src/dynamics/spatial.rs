//! Plücker spatial algebra used by the recursive algorithms.
//!
//! Spatial vectors are laid out `[angular; linear]`, motion and force alike,
//! and are expressed in the coordinates of the link they belong to.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type SpatialVec = Vector6<f64>;
pub type SpatialMat = Matrix6<f64>;

#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[inline]
pub fn angular(v: &SpatialVec) -> Vec3 {
    v.fixed_rows::<3>(0).into_owned()
}

#[inline]
pub fn linear(v: &SpatialVec) -> Vec3 {
    v.fixed_rows::<3>(3).into_owned()
}

#[inline]
pub fn spatial(angular: &Vec3, linear: &Vec3) -> SpatialVec {
    SpatialVec::new(angular.x, angular.y, angular.z, linear.x, linear.y, linear.z)
}

/// Coordinate transform from frame A to frame B.
///
/// `rot` maps A-coordinates to B-coordinates and `pos` is the origin of B
/// expressed in A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rot: Mat3,
    pub pos: Vec3,
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rot: Mat3::identity(),
            pos: Vec3::zeros(),
        }
    }

    pub fn new(rot: Mat3, pos: Vec3) -> Self {
        Self { rot, pos }
    }

    pub fn apply_motion(&self, m: &SpatialVec) -> SpatialVec {
        let w = angular(m);
        let v = linear(m);
        spatial(&(self.rot * w), &(self.rot * (v - self.pos.cross(&w))))
    }

    pub fn apply_force(&self, f: &SpatialVec) -> SpatialVec {
        let n = angular(f);
        let fl = linear(f);
        spatial(&(self.rot * (n - self.pos.cross(&fl))), &(self.rot * fl))
    }

    /// Transpose action on forces: takes a B-coordinate force back to A.
    pub fn inv_apply_force(&self, f: &SpatialVec) -> SpatialVec {
        let n = self.rot.transpose() * angular(f);
        let fl = self.rot.transpose() * linear(f);
        spatial(&(n + self.pos.cross(&fl)), &fl)
    }

    pub fn inv_apply_motion(&self, m: &SpatialVec) -> SpatialVec {
        let w = self.rot.transpose() * angular(m);
        let v = self.rot.transpose() * linear(m);
        spatial(&w, &(v + self.pos.cross(&w)))
    }

    /// `self` maps A to B, `next` maps B to C; the result maps A to C.
    pub fn then(&self, next: &Transform) -> Transform {
        Transform {
            rot: next.rot * self.rot,
            pos: self.pos + self.rot.transpose() * next.pos,
        }
    }

    /// 6×6 motion-transform matrix.
    pub fn motion_matrix(&self) -> SpatialMat {
        let mut x = SpatialMat::zeros();
        let e = self.rot;
        let erx = -e * skew(&self.pos);
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
        x.fixed_view_mut::<3, 3>(3, 0).copy_from(&erx);
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(&e);
        x
    }
}

/// Motion cross product `v ×m m`.
pub fn cross_motion(v: &SpatialVec, m: &SpatialVec) -> SpatialVec {
    let w = angular(v);
    let vl = linear(v);
    let mw = angular(m);
    let ml = linear(m);
    spatial(&w.cross(&mw), &(w.cross(&ml) + vl.cross(&mw)))
}

/// Force cross product `v ×* f`.
pub fn cross_force(v: &SpatialVec, f: &SpatialVec) -> SpatialVec {
    let w = angular(v);
    let vl = linear(v);
    let n = angular(f);
    let fl = linear(f);
    spatial(&(w.cross(&n) + vl.cross(&fl)), &w.cross(&fl))
}

/// Spatial inertia of a rigid body about its link origin.
pub fn spatial_inertia(mass: f64, com: &Vec3, inertia_com: &Mat3) -> SpatialMat {
    let c = skew(com);
    let mut i = SpatialMat::zeros();
    let rot = inertia_com + mass * c * c.transpose();
    i.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    i.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * c));
    i.fixed_view_mut::<3, 3>(3, 0).copy_from(&(mass * c.transpose()));
    i.fixed_view_mut::<3, 3>(3, 3).copy_from(&(mass * Mat3::identity()));
    i
}

/// Rotation matrix (child ← parent) of a revolute joint turned by `angle`
/// about `axis`.
pub fn joint_rotation(axis: &Vec3, angle: f64) -> Mat3 {
    let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(*axis), angle);
    r.matrix().transpose()
}

/// Rotation vector (axis times angle, angle in `[0, pi]`) of a rotation
/// matrix. Accurate for small angles, where `acos` of the trace is not.
pub fn rotation_log(r: &Mat3) -> Vec3 {
    let vee = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let s = vee.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let angle = s.atan2(c);
    if angle < 1e-8 {
        return vee;
    }
    if c > -0.99 {
        return vee * (angle / s);
    }
    // near pi the antisymmetric part vanishes; use the symmetric part
    let b = (r + r.transpose()) * 0.5 - Mat3::identity() * c;
    let col = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap_or(0);
    let mut axis: Vec3 = b.column(col).into_owned();
    axis /= axis.norm();
    if axis.dot(&vee) < 0.0 {
        axis = -axis;
    }
    axis * angle
}
