#![allow(dead_code)]

use nalgebra::{UnitQuaternion, Vector3};
use qwbc::dynamics::{GeneralizedState, RobotModel};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random configuration and velocity within the ranges exercised by the suite.
pub fn random_state(model: &RobotModel, seed: u64) -> GeneralizedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v3 = |lo: f64, hi: f64| {
        Vector3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))
    };
    let mut s = GeneralizedState::zero(model);
    s.base_position = v3(-1.0, 1.0);
    s.base_orientation = UnitQuaternion::from_scaled_axis(v3(-1.0, 1.0));
    s.base_linear_velocity = v3(-1.0, 1.0);
    s.base_angular_velocity = v3(-1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919).wrapping_add(1));
    for v in s.joint_positions.iter_mut() {
        *v = rng.random_range(-1.5..1.5);
    }
    for v in s.joint_velocities.iter_mut() {
        *v = rng.random_range(-2.0..2.0);
    }
    s
}
