use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use proptest::prelude::*;
use qwbc::dynamics::{forward_dynamics, gravity, DynamicsQuantities, GeneralizedState, RobotModel};
use qwbc::experiment::{ImpedancePresets, MassLevel};
use qwbc::qp::{solve, QpStatus};
use qwbc::sim::{standing_state, ContactParams};
use qwbc::template::Vec3;
use qwbc::wbc::{
    assemble_qp, damped_pinv, manipulability, map_torques, pinv_damping, Desireds, WbcConfig, WbcController,
    WbcInput, WbcOutput,
};

const FULL: [bool; 4] = [true; 4];
const TROT: [bool; 4] = [true, false, false, true];

struct Rig {
    model: RobotModel,
    state: GeneralizedState,
    controller: WbcController,
    desired: Desireds,
}

fn rig(cfg: WbcConfig) -> Rig {
    let model = RobotModel::hyq_arm();
    let state = standing_state(&model, &ContactParams::default()).unwrap();
    let settings = ImpedancePresets::default().settings(MassLevel::Nominal, MassLevel::Nominal).unwrap();
    let controller = WbcController::new(&model, settings, cfg).unwrap();
    let desired = Desireds::hold(&model, &state, controller.frames().ee);
    Rig {
        model,
        state,
        controller,
        desired,
    }
}

impl Rig {
    fn input(&self, stance: [bool; 4], swing_accel: [Vec3; 4], fe: Vec3) -> WbcInput<'_> {
        WbcInput {
            model: &self.model,
            state: &self.state,
            base_acceleration: Vec3::zeros(),
            stance,
            swing_accel,
            desired: &self.desired,
            fe,
        }
    }

    fn step(&mut self, stance: [bool; 4], swing_accel: [Vec3; 4], fe: Vec3) -> WbcOutput {
        let model = self.model.clone();
        let state = self.state.clone();
        let desired = self.desired.clone();
        let input = WbcInput {
            model: &model,
            state: &state,
            base_acceleration: Vec3::zeros(),
            stance,
            swing_accel,
            desired: &desired,
            fe,
        };
        self.controller.control_step(&input).unwrap()
    }
}

/// Physical constraint check, independent of the QP row layout.
fn assert_physically_admissible(r: &Rig, out: &WbcOutput, stance: [bool; 4]) {
    let c = &r.controller.config;
    for (leg, f) in out.forces.iter().enumerate() {
        if !stance[leg] {
            assert_eq!(*f, Vec3::zeros());
            continue;
        }
        let tol = 1e-6;
        assert!(f.x.abs() <= c.friction_coefficient * f.z + tol, "leg {leg}: {f:?}");
        assert!(f.y.abs() <= c.friction_coefficient * f.z + tol, "leg {leg}: {f:?}");
        assert!(f.z >= c.min_normal_force - tol && f.z <= c.max_normal_force + tol, "leg {leg}: {f:?}");
    }
    for (k, (t, l)) in out.tau.iter().zip(r.model.limits()).enumerate() {
        assert!(*t >= l.tau_min - 1e-6 && *t <= l.tau_max + 1e-6, "joint {k}: {t}");
    }
    assert!(out.slacks.iter().all(|s| *s >= -1e-9));
}

#[test]
fn full_stance_dimensions() {
    let r = rig(WbcConfig::default());
    let asm = assemble_qp(&r.input(FULL, [Vec3::zeros(); 4], Vec3::zeros()), r.controller.frames(), &r.controller.settings, &r.controller.config).unwrap();
    assert_eq!(asm.layout.n(), 37);
    assert_eq!(asm.problem.n(), 37);
    assert_eq!(asm.problem.n_eq(), 18);
    assert_eq!(asm.layout.friction.len(), 24);
    assert_eq!(asm.layout.slacks.len(), 0);
}

#[test]
fn trot_phase_dimensions() {
    let r = rig(WbcConfig::default());
    let asm = assemble_qp(&r.input(TROT, [Vec3::zeros(); 4], Vec3::zeros()), r.controller.frames(), &r.controller.settings, &r.controller.config).unwrap();
    assert_eq!(asm.layout.n(), 37);
    assert_eq!(asm.layout.slacks.len(), 6);
    assert_eq!(asm.layout.eq_stance.len(), 6);
    assert_eq!(asm.layout.swing.len(), 12);
    assert_eq!(asm.layout.slack_positivity.len(), 6);
    assert_eq!(asm.layout.friction.len(), 12);
}

#[test]
fn empty_contact_set_is_rejected() {
    let r = rig(WbcConfig::default());
    let res = assemble_qp(&r.input([false; 4], [Vec3::zeros(); 4], Vec3::zeros()), r.controller.frames(), &r.controller.settings, &r.controller.config);
    assert!(res.is_err());
}

#[test]
fn stance_rows_have_exact_zero_arm_columns() {
    let r = rig(WbcConfig::default());
    for stance in [FULL, TROT] {
        let asm = assemble_qp(&r.input(stance, [Vec3::zeros(); 4], Vec3::zeros()), r.controller.frames(), &r.controller.settings, &r.controller.config).unwrap();
        let nl = r.model.n_leg();
        let na = r.model.n_arm();
        let block = asm.problem.a.view((asm.layout.eq_stance.start, 6 + nl), (asm.layout.eq_stance.len(), na));
        assert!(block.iter().all(|v| *v == 0.0));
    }
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| ((seed as f64 + 1.0) * (1.3 * i as f64 + 0.7 * j as f64 + 0.1)).sin());
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

#[test]
fn pinv_axioms_without_damping() {
    let cfg = WbcConfig::default();
    for seed in 0..10 {
        let j = DMatrix::from_fn(3, 7, |i, k| (1.7 * ((i + 1) * (k + 1)) as f64 + seed as f64).sin());
        assert!(manipulability(&j) > cfg.manipulability_threshold);
        let m = random_spd(7, seed as u64);
        let p = damped_pinv(&j, &m, &cfg);
        assert!((&j * &p * &j - &j).amax() < 1e-9);
        assert!((&p * &j * &p - &p).amax() < 1e-9);
        // M-weighted projector is M-symmetric
        let mp = &m * &p * &j;
        assert!((&mp - mp.transpose()).amax() < 1e-9);
    }
}

#[test]
fn damped_pinv_is_bounded_at_a_singularity() {
    let cfg = WbcConfig::default();
    let mut j = DMatrix::from_fn(3, 7, |i, k| ((i * 7 + k) as f64 * 0.91).sin());
    let r0 = j.row(0).into_owned();
    j.set_row(1, &(r0 * 2.0));
    let m = random_spd(7, 3);
    let p = damped_pinv(&j, &m, &cfg);
    assert!(p.iter().all(|v| v.is_finite()));
    // with J~ = J M^-1/2 the singular values of M^1/2 J+ are s / (s^2 + l^2) <= 1 / (2 l)
    let lambda = pinv_damping(manipulability(&j), &cfg).sqrt();
    assert!(lambda > 0.0);
    let e = SymmetricEigen::new(m.clone());
    let half = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt)) * e.eigenvectors.transpose();
    let sv = (half * &p).singular_values();
    assert!(sv.max() <= 1.0 / (2.0 * lambda) + 1e-9, "{} vs {}", sv.max(), 1.0 / (2.0 * lambda));
}

#[test]
fn damped_pinv_is_continuous_across_the_threshold() {
    let cfg = WbcConfig::default();
    let m = random_spd(7, 5);
    let base = DMatrix::from_fn(3, 7, |i, k| (1.3 * ((i + 1) * (k + 2)) as f64).cos());
    // scale a row so that the manipulability passes through the threshold
    let at = |s: f64| {
        let mut j = base.clone();
        let r = j.row(2) * s;
        j.set_row(2, &r);
        j
    };
    let w1 = manipulability(&at(1.0));
    let s_star = cfg.manipulability_threshold / w1;
    let h = 1e-9 * s_star;
    let below = damped_pinv(&at(s_star - h), &m, &cfg);
    let above = damped_pinv(&at(s_star + h), &m, &cfg);
    assert!((&below - &above).amax() < 1e-6 * below.amax(), "{:e}", (&below - &above).amax() / below.amax());
}

#[test]
fn arm_task_reproduces_cartesian_target() {
    let mut r = rig(WbcConfig::default());
    // off-desired arm state with velocities so every term contributes
    let nl = r.model.n_leg();
    for k in 0..r.model.n_arm() {
        r.state.joint_positions[nl + k] += 0.05 * ((k + 1) as f64).sin();
        r.state.joint_velocities[nl + k] = 0.3 * ((k + 2) as f64).cos();
    }
    r.state.base_angular_velocity = Vector3::new(0.1, -0.2, 0.05);
    let mut cfg = r.controller.config.clone();
    cfg.posture_kp = 0.0;
    cfg.posture_kd = 0.0;
    let input = r.input(FULL, [Vec3::zeros(); 4], Vec3::new(10.0, -5.0, 3.0));
    let asm = assemble_qp(&input, r.controller.frames(), &r.controller.settings, &cfg).unwrap();
    let arm = &asm.arm;
    assert!(manipulability(&arm.jacobian) > cfg.manipulability_threshold);
    let reproduced = &arm.jacobian * &arm.qdd_desired;
    let got = Vec3::new(reproduced[0], reproduced[1], reproduced[2]) + arm.drift;
    assert!((got - arm.cartesian_target).amax() < 1e-6, "{got} vs {}", arm.cartesian_target);

    // any posture acceleration stays in the task null space
    let null = DMatrix::identity(7, 7) - &arm.pinv * &arm.jacobian;
    for seed in 0..5 {
        let v = DVector::from_fn(7, |i, _| ((seed * 7 + i) as f64).sin() * 10.0);
        assert!((&arm.jacobian * (&null * v)).amax() < 1e-8);
    }
}

#[test]
fn nominal_standing_is_optimal_with_positive_margins() {
    let mut r = rig(WbcConfig::default());
    let out = r.step(FULL, [Vec3::zeros(); 4], Vec3::zeros());
    assert_eq!(out.diagnostics.status, QpStatus::Optimal);
    assert!(out.diagnostics.min_margin > 0.0);
    assert!(out.diagnostics.residuals.max() <= 1e-6);
    assert_physically_admissible(&r, &out, FULL);
}

#[test]
fn static_stance_carries_the_weight() {
    let mut r = rig(WbcConfig::default());
    let out = r.step(FULL, [Vec3::zeros(); 4], Vec3::zeros());
    let fz: f64 = out.forces.iter().map(|f| f.z).sum();
    let weight = r.model.total_mass() * gravity().norm();
    assert!((fz - weight).abs() < 1.0, "{fz} vs {weight}");
}

#[test]
fn torques_round_trip_through_forward_dynamics() {
    let mut r = rig(WbcConfig::default());
    let fe = Vec3::new(30.0, 10.0, -5.0);
    for stance in [FULL, TROT] {
        let swing = [Vec3::new(0.0, 0.0, 2.0); 4];
        let out = r.step(stance, swing, fe);
        assert_eq!(out.diagnostics.status, QpStatus::Optimal);
        let frames = *r.controller.frames();
        let mut ext: Vec<(usize, Vec3)> =
            (0..4).filter(|&l| stance[l]).map(|l| (frames.feet[l], out.forces[l])).collect();
        ext.push((frames.ee, fe));
        let udot = forward_dynamics(&r.model, &r.state, &out.tau, &ext, &gravity()).unwrap();
        assert!((&udot - &out.udot).amax() < 1e-6, "{:e}", (&udot - &out.udot).amax());
    }
}

#[test]
fn gravity_off_rest_maps_to_zero_torques() {
    let r = rig(WbcConfig::default());
    let frames = r.controller.frames();
    let stance: Vec<usize> = frames.feet.to_vec();
    let dq = DynamicsQuantities::compute(&r.model, &r.state, &Vector3::zeros(), &stance, frames.ee);
    let tau = map_torques(&DVector::zeros(r.model.dof()), &DVector::zeros(12), &Vec3::zeros(), &dq);
    assert!(tau.amax() < 1e-12);
}

#[test]
fn absurd_swing_reference_is_absorbed_by_slack() {
    let mut r = rig(WbcConfig::default());
    let swing = [Vec3::new(1e6, -1e6, 1e6); 4];
    let out = r.step(TROT, swing, Vec3::zeros());
    assert_eq!(out.diagnostics.status, QpStatus::Optimal);
    assert!(out.slacks.amax() > 1.0, "slack {}", out.slacks.amax());
    assert!(out.diagnostics.violations.max_hard() <= 1e-6);
    assert_physically_admissible(&r, &out, TROT);
}

#[test]
fn slack_vanishes_when_the_swing_constraint_is_feasible() {
    let mut r = rig(WbcConfig::default());
    let swing = [Vec3::new(0.5, 0.0, 1.0); 4];
    let out = r.step(TROT, swing, Vec3::zeros());
    assert_eq!(out.diagnostics.status, QpStatus::Optimal);
    // the unrelaxed problem (slacks pinned to zero) is feasible
    let input = r.input(TROT, swing, Vec3::zeros());
    let mut asm = assemble_qp(&input, r.controller.frames(), &r.controller.settings, &r.controller.config).unwrap();
    for i in asm.layout.slack_positivity.clone() {
        asm.problem.upper[i] = asm.problem.lower[i];
    }
    let hard = solve(&asm.problem, 1e-6, 4000).unwrap();
    assert_eq!(hard.status, QpStatus::Optimal);
    assert!(out.slacks.amax() < 1e-6, "{}", out.slacks.amax());
}

#[test]
fn low_friction_never_yields_inadmissible_forces() {
    let cfg = WbcConfig {
        friction_coefficient: 0.01,
        ..WbcConfig::default()
    };
    let mut r = rig(cfg);
    let out = r.step(FULL, [Vec3::zeros(); 4], Vec3::new(200.0, 0.0, 0.0));
    if out.diagnostics.status == QpStatus::Optimal {
        assert_physically_admissible(&r, &out, FULL);
    } else {
        assert!(out.diagnostics.held);
        assert!(out.tau.iter().all(|t| *t == 0.0), "no previous torques to hold");
    }
}

#[test]
fn desired_wrench_pulls_base_toward_template() {
    let mut r = rig(WbcConfig::default());
    r.desired.xb.x -= 0.01;
    let input = r.input(FULL, [Vec3::zeros(); 4], Vec3::zeros());
    let asm = assemble_qp(&input, r.controller.frames(), &r.controller.settings, &r.controller.config).unwrap();
    let wrench_at_rest = {
        let r2 = rig(WbcConfig::default());
        let i2 = r2.input(FULL, [Vec3::zeros(); 4], Vec3::zeros());
        assemble_qp(&i2, r2.controller.frames(), &r2.controller.settings, &r2.controller.config).unwrap().desired_wrench
    };
    let delta = asm.desired_wrench - wrench_at_rest;
    assert!((delta.x + 10.0).abs() < 1e-9, "{delta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_optimal_step_is_admissible(
        fx in -80.0..80.0f64,
        fy in -80.0..80.0f64,
        fz in -40.0..40.0f64,
        sz in -20.0..20.0f64,
        trot in any::<bool>(),
    ) {
        let mut r = rig(WbcConfig::default());
        let stance = if trot { TROT } else { FULL };
        let out = r.step(stance, [Vec3::new(0.0, 0.0, sz); 4], Vec3::new(fx, fy, fz));
        prop_assert_eq!(out.diagnostics.status, QpStatus::Optimal);
        prop_assert!(out.diagnostics.violations.max_hard() <= 1e-6);
        prop_assert!(out.diagnostics.violations.equality <= 1e-6);
        assert_physically_admissible(&r, &out, stance);
    }
}
