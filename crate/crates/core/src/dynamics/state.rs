use nalgebra::{DVector, UnitQuaternion};
use thiserror::Error;

use super::model::RobotModel;
use super::spatial::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("expected {expected} joint {what}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("base orientation quaternion has norm {0}")]
    NotUnit(f64),
    #[error("state contains non-finite values")]
    NonFinite,
}

/// Floating-base configuration and generalized velocity.
///
/// The generalized velocity is stacked as `[v_b; w_b; qd]` with the base
/// linear velocity of the trunk origin and the angular velocity both in world
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedState {
    pub base_position: Vec3,
    /// World ← base.
    pub base_orientation: UnitQuaternion<f64>,
    pub joint_positions: DVector<f64>,
    pub base_linear_velocity: Vec3,
    pub base_angular_velocity: Vec3,
    pub joint_velocities: DVector<f64>,
}

impl GeneralizedState {
    pub fn zero(model: &RobotModel) -> Self {
        Self {
            base_position: Vec3::zeros(),
            base_orientation: UnitQuaternion::identity(),
            joint_positions: DVector::zeros(model.n_joints()),
            base_linear_velocity: Vec3::zeros(),
            base_angular_velocity: Vec3::zeros(),
            joint_velocities: DVector::zeros(model.n_joints()),
        }
    }

    /// Robot at its home joint posture, trunk at `base_position`, at rest.
    pub fn home(model: &RobotModel, base_position: Vec3) -> Self {
        let mut s = Self::zero(model);
        s.base_position = base_position;
        s.joint_positions = DVector::from_vec(model.home_positions());
        s
    }

    pub fn validate(&self, model: &RobotModel) -> Result<(), StateError> {
        let n = model.n_joints();
        if self.joint_positions.len() != n {
            return Err(StateError::Length {
                what: "positions",
                expected: n,
                got: self.joint_positions.len(),
            });
        }
        if self.joint_velocities.len() != n {
            return Err(StateError::Length {
                what: "velocities",
                expected: n,
                got: self.joint_velocities.len(),
            });
        }
        let norm = self.base_orientation.quaternion().norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateError::NotUnit(norm));
        }
        let finite = self.base_position.iter().all(|v| v.is_finite())
            && self.base_linear_velocity.iter().all(|v| v.is_finite())
            && self.base_angular_velocity.iter().all(|v| v.is_finite())
            && self.joint_positions.iter().all(|v| v.is_finite())
            && self.joint_velocities.iter().all(|v| v.is_finite());
        if !finite {
            return Err(StateError::NonFinite);
        }
        Ok(())
    }

    pub fn velocity(&self) -> DVector<f64> {
        let n = self.joint_velocities.len();
        let mut u = DVector::zeros(6 + n);
        u.fixed_rows_mut::<3>(0).copy_from(&self.base_linear_velocity);
        u.fixed_rows_mut::<3>(3).copy_from(&self.base_angular_velocity);
        u.rows_mut(6, n).copy_from(&self.joint_velocities);
        u
    }

    pub fn set_velocity(&mut self, u: &DVector<f64>) {
        let n = self.joint_velocities.len();
        assert_eq!(u.len(), 6 + n, "velocity length");
        self.base_linear_velocity = u.fixed_rows::<3>(0).into_owned();
        self.base_angular_velocity = u.fixed_rows::<3>(3).into_owned();
        self.joint_velocities.copy_from(&u.rows(6, n));
    }

    /// Advances the configuration by `dt` along the generalized velocity `u`.
    /// The orientation update uses the exponential map of the world-frame
    /// angular velocity and is renormalized.
    pub fn advance_configuration(&mut self, u: &DVector<f64>, dt: f64) {
        let n = self.joint_positions.len();
        self.base_position += u.fixed_rows::<3>(0) * dt;
        let w: Vec3 = u.fixed_rows::<3>(3).into_owned();
        let dq = UnitQuaternion::from_scaled_axis(w * dt);
        let q = dq * self.base_orientation;
        self.base_orientation = UnitQuaternion::new_normalize(q.into_inner());
        self.joint_positions += u.rows(6, n) * dt;
    }

    /// Copy with configuration displaced by `eps * u` and velocity untouched.
    pub fn displaced(&self, u: &DVector<f64>, eps: f64) -> Self {
        let mut s = self.clone();
        s.advance_configuration(u, eps);
        s
    }

    /// Trunk pinned at the world origin, at rest; joint state unchanged.
    pub fn with_fixed_base(&self) -> Self {
        let mut s = self.clone();
        s.base_position = Vec3::zeros();
        s.base_orientation = UnitQuaternion::identity();
        s.base_linear_velocity = Vec3::zeros();
        s.base_angular_velocity = Vec3::zeros();
        s
    }
}
