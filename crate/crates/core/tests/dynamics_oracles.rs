mod common;

use common::random_state;
use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use proptest::prelude::*;
use qwbc::dynamics::{
    bias_vector, forward_dynamics, frame_jacobian, gravity, inverse_dynamics, jacobian_dot_u, mass_matrix,
    GeneralizedState, JacobianRows, Kinematics, RobotModel,
};
use qwbc::dynamics::spatial::rotation_log;

fn probed_mass_matrix(model: &RobotModel, state: &GeneralizedState) -> DMatrix<f64> {
    let mut rest = state.clone();
    rest.set_velocity(&DVector::zeros(model.dof()));
    let n = model.dof();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        let col = inverse_dynamics(model, &rest, &e, &Vector3::zeros(), &[]);
        m.set_column(k, &col);
    }
    m
}

fn potential_energy(model: &RobotModel, state: &GeneralizedState) -> f64 {
    let kin = Kinematics::new(model, state);
    model
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let com = kin.pos[i] + kin.rot[i] * l.com;
            -l.mass * gravity().dot(&com)
        })
        .sum()
}

#[test]
fn crba_matches_inverse_dynamics_probing() {
    let model = RobotModel::hyq_arm();
    for seed in 0..100 {
        let s = random_state(&model, seed);
        let m = mass_matrix(&model, &s);
        let oracle = probed_mass_matrix(&model, &s);
        let err = (&m - &oracle).amax();
        assert!(err < 1e-9, "seed {seed}: {err:e}");
        let asym = (&m - m.transpose()).amax();
        assert!(asym < 1e-12, "seed {seed}: asymmetry {asym:e}");
    }
}

#[test]
fn gravity_rows_are_potential_gradient() {
    let model = RobotModel::hyq_arm();
    for seed in 0..10 {
        let mut s = random_state(&model, seed);
        s.set_velocity(&DVector::zeros(model.dof()));
        let h = bias_vector(&model, &s, &gravity());
        let eps = 1e-6;
        for k in 0..model.dof() {
            let mut e = DVector::zeros(model.dof());
            e[k] = 1.0;
            let grad = (potential_energy(&model, &s.displaced(&e, eps))
                - potential_energy(&model, &s.displaced(&e, -eps)))
                / (2.0 * eps);
            assert!((grad - h[k]).abs() < 1e-5, "seed {seed} dof {k}: {grad} vs {}", h[k]);
        }
    }
}

#[test]
fn velocity_terms_satisfy_power_identity() {
    // u^T h(q, u) = 1/2 u^T Mdot u with gravity off
    let model = RobotModel::hyq_arm();
    for seed in 0..20 {
        let s = random_state(&model, seed);
        let u = s.velocity();
        let h = bias_vector(&model, &s, &Vector3::zeros());
        let eps = 1e-6;
        let mdot = (mass_matrix(&model, &s.displaced(&u, eps)) - mass_matrix(&model, &s.displaced(&u, -eps)))
            / (2.0 * eps);
        let lhs = u.dot(&h);
        let rhs = 0.5 * u.dot(&(mdot * &u));
        assert!((lhs - rhs).abs() < 1e-5 * (1.0 + lhs.abs()), "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn bias_is_zero_acceleration_inverse_dynamics() {
    let model = RobotModel::hyq_arm();
    for seed in 0..20 {
        let s = random_state(&model, seed);
        let h = bias_vector(&model, &s, &gravity());
        let id = inverse_dynamics(&model, &s, &DVector::zeros(model.dof()), &gravity(), &[]);
        assert!((h - id).amax() < 1e-9);
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let model = RobotModel::hyq_arm();
    let eps = 1e-6;
    for seed in 0..20 {
        let s = random_state(&model, seed);
        let u = s.velocity();
        let plus = Kinematics::new(&model, &s.displaced(&u, eps));
        let minus = Kinematics::new(&model, &s.displaced(&u, -eps));
        for (f, _) in model.frames().iter().enumerate() {
            let j = frame_jacobian(&model, &s, f, JacobianRows::Full);
            let ju = &j * &u;
            let dp = (plus.frame_position(&model, f) - minus.frame_position(&model, f)) / (2.0 * eps);
            let dr = rotation_log(&(plus.frame_rotation(&model, f) * minus.frame_rotation(&model, f).transpose()))
                / (2.0 * eps);
            let lin_err = (ju.fixed_rows::<3>(0) - dp).amax();
            let ang_err = (ju.fixed_rows::<3>(3) - dr).amax();
            assert!(lin_err < 1e-5 && ang_err < 1e-5, "seed {seed} frame {f}: {lin_err:e} {ang_err:e}");
        }
    }
}

#[test]
fn jdot_u_matches_finite_differences() {
    let model = RobotModel::hyq_arm();
    let eps = 1e-5;
    for seed in 0..20 {
        let s = random_state(&model, seed);
        let u = s.velocity();
        for f in 0..model.frames().len() {
            let jp = frame_jacobian(&model, &s.displaced(&u, eps), f, JacobianRows::Full) * &u;
            let jm = frame_jacobian(&model, &s.displaced(&u, -eps), f, JacobianRows::Full) * &u;
            let fd = (jp - jm) / (2.0 * eps);
            let a = jacobian_dot_u(&model, &s, f);
            let err = (DVector::from_column_slice(a.as_slice()) - fd).amax();
            assert!(err < 1e-4, "seed {seed} frame {f}: {err:e}");
        }
    }
}

#[test]
fn forward_dynamics_residual() {
    let model = RobotModel::hyq_arm();
    let foot = model.frame_index("LF").unwrap();
    let ee = model.frame_index("E").unwrap();
    for seed in 0..50 {
        let s = random_state(&model, seed);
        let tau = DVector::from_fn(model.n_joints(), |i, _| ((seed as usize * 31 + i * 17) % 41) as f64 - 20.0);
        let ext = [(foot, Vector3::new(10.0, -5.0, 300.0)), (ee, Vector3::new(50.0, 20.0, 0.0))];
        let udot = forward_dynamics(&model, &s, &tau, &ext, &gravity()).unwrap();
        let m = mass_matrix(&model, &s);
        let h = bias_vector(&model, &s, &gravity());
        let mut rhs = DVector::zeros(model.dof());
        rhs.rows_mut(6, model.n_joints()).copy_from(&tau);
        for (f, force) in &ext {
            rhs += frame_jacobian(&model, &s, *f, JacobianRows::Translational).transpose() * force;
        }
        let res = &m * &udot + &h - &rhs;
        let scale = rhs.amax().max(h.amax()).max(1.0);
        assert!(res.amax() / scale < 1e-9, "seed {seed}: {:e}", res.amax() / scale);
    }
}

fn kinetic_energy(model: &RobotModel, s: &GeneralizedState) -> f64 {
    let u = s.velocity();
    0.5 * u.dot(&(mass_matrix(model, s) * &u))
}

#[test]
fn unforced_motion_conserves_kinetic_energy() {
    let model = RobotModel::hyq_arm();
    let mut s = random_state(&model, 42);
    let tau = DVector::zeros(model.n_joints());
    let g = Vector3::zeros();
    let accel = |st: &GeneralizedState| forward_dynamics(&model, st, &tau, &[], &g).unwrap();
    let stage = |st: &GeneralizedState, du: &DVector<f64>, da: &DVector<f64>, h: f64| {
        let mut n = st.displaced(du, h);
        n.set_velocity(&(st.velocity() + da * h));
        n
    };
    let e0 = kinetic_energy(&model, &s);
    let dt = 1e-4;
    for _ in 0..10_000 {
        let u1 = s.velocity();
        let a1 = accel(&s);
        let s2 = stage(&s, &u1, &a1, 0.5 * dt);
        let u2 = s2.velocity();
        let a2 = accel(&s2);
        let s3 = stage(&s, &u2, &a2, 0.5 * dt);
        let u3 = s3.velocity();
        let a3 = accel(&s3);
        let s4 = stage(&s, &u3, &a3, dt);
        let u4 = s4.velocity();
        let a4 = accel(&s4);
        let du = (u1 + u2 * 2.0 + u3 * 2.0 + u4) / 6.0;
        let da = (a1 + a2 * 2.0 + a3 * 2.0 + a4) / 6.0;
        s = stage(&s, &du, &da, dt);
    }
    let e1 = kinetic_energy(&model, &s);
    assert!(((e1 - e0) / e0).abs() < 1e-6, "relative drift {:e}", (e1 - e0) / e0);
}

#[test]
fn free_fall_accelerates_centre_of_mass_at_gravity() {
    let model = RobotModel::hyq_arm();
    let s = random_state(&model, 9);
    let udot = forward_dynamics(&model, &s, &DVector::zeros(model.n_joints()), &[], &gravity()).unwrap();
    // linear momentum rate equals total weight: rows 0..3 of M udot + h vanish
    let m = mass_matrix(&model, &s);
    let h = bias_vector(&model, &s, &Vector3::zeros());
    let momentum_rate = (m * &udot + h).rows(0, 3).into_owned();
    let expected = gravity() * model.total_mass();
    assert!((momentum_rate - expected).amax() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(seed in any::<u64>()) {
        let model = RobotModel::hyq_arm();
        let s = random_state(&model, seed);
        let m = mass_matrix(&model, &s);
        prop_assert!((&m - m.transpose()).amax() < 1e-12);
        let eig = SymmetricEigen::new(m).eigenvalues;
        prop_assert!(eig.min() > 1e-8);
    }

    #[test]
    fn transpose_mapping_preserves_power(seed in any::<u64>(), fx in -100.0..100.0f64, fy in -100.0..100.0f64, fz in -100.0..100.0f64) {
        let model = RobotModel::hyq_arm();
        let s = random_state(&model, seed);
        let u = s.velocity();
        let f = Vector3::new(fx, fy, fz);
        for frame in 0..model.frames().len() {
            let j = frame_jacobian(&model, &s, frame, JacobianRows::Translational);
            let a = u.dot(&(j.transpose() * f));
            let b = (&j * &u).dot(&f);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn stance_and_arm_jacobians_have_disjoint_columns(seed in any::<u64>()) {
        let model = RobotModel::hyq_arm();
        let s = random_state(&model, seed);
        let (nl, na) = (model.n_leg(), model.n_arm());
        for name in ["LF", "RF", "LH", "RH"] {
            let j = frame_jacobian(&model, &s, model.frame_index(name).unwrap(), JacobianRows::Full);
            prop_assert_eq!(j.view((0, 6 + nl), (6, na)).amax(), 0.0);
        }
        let je = frame_jacobian(&model, &s, model.frame_index("E").unwrap(), JacobianRows::Full);
        prop_assert_eq!(je.view((0, 6), (6, nl)).amax(), 0.0);
    }
}
