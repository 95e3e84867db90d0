use serde::{Deserialize, Serialize};

use crate::template::Vec3;

/// Penalty ground contact on the plane `z = ground`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    pub normal_stiffness: f64,
    pub normal_damping: f64,
    pub friction: f64,
    /// Below this sliding speed the Coulomb force is scaled down linearly.
    pub regularization_velocity: f64,
    pub ground: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            normal_stiffness: 1e5,
            normal_damping: 2e3,
            friction: 1.0,
            regularization_velocity: 1e-3,
            ground: 0.0,
        }
    }
}

impl ContactParams {
    /// Checks positivity and that the ground is at least as grippy as the
    /// controller assumes.
    pub fn validate(&self, controller_friction: f64) -> Result<(), String> {
        if !(self.normal_stiffness > 0.0 && self.normal_damping > 0.0) {
            return Err("contact stiffness and damping must be positive".into());
        }
        if !(self.regularization_velocity > 0.0) {
            return Err("regularization velocity must be positive".into());
        }
        if !(self.friction >= controller_friction) {
            return Err(format!(
                "simulated friction {} below controller friction {controller_friction}",
                self.friction
            ));
        }
        Ok(())
    }
}

/// Spring-damper normal force (never pulling) and regularized Coulomb
/// friction opposing the sliding velocity.
pub fn ground_contact_force(position: &Vec3, velocity: &Vec3, p: &ContactParams) -> Vec3 {
    let depth = p.ground - position.z;
    if depth <= 0.0 {
        return Vec3::zeros();
    }
    let normal = (p.normal_stiffness * depth - p.normal_damping * velocity.z).max(0.0);
    let vt = Vec3::new(velocity.x, velocity.y, 0.0);
    let speed = vt.norm();
    let tangential = -vt * (p.friction * normal / speed.max(p.regularization_velocity));
    Vec3::new(tangential.x, tangential.y, normal)
}
