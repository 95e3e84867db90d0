use proptest::prelude::*;
use qwbc::template::{
    integrate_template, write_trajectory_csv, AxisImpedance, ImpedanceSettings, TemplateState, Vec3,
};

fn settings(mb: f64, me: f64) -> ImpedanceSettings {
    ImpedanceSettings {
        base: AxisImpedance::critically_damped(mb, 1000.0).unwrap(),
        ee: AxisImpedance::critically_damped(me, 500.0).unwrap(),
        rot_stiffness: Vec3::repeat(1000.0),
        rot_damping: Vec3::repeat(150.0),
    }
}

fn start() -> TemplateState {
    TemplateState::at_rest(Vec3::new(0.0, 0.0, 0.55), Vec3::new(0.75, 0.0, 0.65))
}

fn step(t: f64) -> Vec3 {
    if t >= 1.0 {
        Vec3::new(50.0, 0.0, 0.0)
    } else {
        Vec3::zeros()
    }
}

#[test]
fn step_response_settles_on_stiffness_equilibrium() {
    let x0 = start();
    let traj = integrate_template(&x0, step, &settings(92.0, 4.0), 1e-3, 10.0).unwrap();
    let last = traj.last().unwrap();
    assert!((last.t - 10.0).abs() < 1e-9);
    assert!((last.xb.x - x0.xb.x - 0.050).abs() < 1e-4);
    assert!((last.xe.x - x0.xe.x - 0.150).abs() < 1e-4);
}

#[test]
fn zero_force_stays_at_rest() {
    let x0 = start();
    let traj = integrate_template(&x0, |_| Vec3::zeros(), &settings(92.0, 4.0), 1e-3, 2.0).unwrap();
    for s in &traj {
        assert_eq!(s.xb, x0.xb);
        assert_eq!(s.xe, x0.xe);
    }
}

#[test]
fn halving_the_step_barely_moves_the_result() {
    let x0 = start();
    let chirp = |t: f64| Vec3::new(50.0 * (3.0 * t * t).sin(), 0.0, 0.0);
    let s = settings(4.0, 0.4);
    let coarse = integrate_template(&x0, chirp, &s, 1e-3, 3.0).unwrap();
    let fine = integrate_template(&x0, chirp, &s, 5e-4, 3.0).unwrap();
    let a = coarse.last().unwrap();
    let b = fine.last().unwrap();
    assert!((a.xb - b.xb).amax() < 1e-8 && (a.xe - b.xe).amax() < 1e-8);
}

#[test]
fn steady_state_is_independent_of_masses() {
    let x0 = start();
    for (mb, me) in [(4.0, 0.4), (92.0, 4.0), (184.0, 10.0)] {
        let traj = integrate_template(&x0, step, &settings(mb, me), 1e-3, 12.0).unwrap();
        let last = traj.last().unwrap();
        let xbe = (last.xe - last.xb) - (x0.xe - x0.xb);
        assert!((xbe.x - 50.0 / 500.0).abs() < 1e-4, "{mb} {me}");
        assert!((last.xb.x - x0.xb.x - 50.0 / 1000.0).abs() < 1e-4, "{mb} {me}");
    }
}

#[test]
fn csv_export_has_stable_header() {
    let traj = integrate_template(&start(), step, &settings(92.0, 4.0), 1e-3, 0.01).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,xb_x,xb_y,xb_z,vb_x,vb_y,vb_z,xe_x,xe_y,xe_z,ve_x,ve_y,ve_z");
    assert_eq!(lines.count(), traj.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unforced_energy_never_increases(
        mb in 1.0..200.0f64, me in 0.1..20.0f64,
        dx in -0.1..0.1f64, dy in -0.1..0.1f64, vz in -0.5..0.5f64, ve in -0.5..0.5f64,
    ) {
        let s = settings(mb, me);
        let mut x0 = start();
        x0.xb.x += dx;
        x0.xe.y += dy;
        x0.vb.z = vz;
        x0.ve.x = ve;
        let traj = integrate_template(&x0, |_| Vec3::zeros(), &s, 1e-3, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for p in &traj {
            let st = TemplateState { xb: p.xb, vb: p.vb, xe: p.xe, ve: p.ve, ..x0 };
            let e = st.energy(&s);
            prop_assert!(e <= prev + 1e-9);
            prev = e;
        }
    }

    #[test]
    fn axes_evolve_independently(mb in 1.0..200.0f64, me in 0.1..20.0f64, fx in -100.0..100.0f64) {
        let x0 = start();
        let traj = integrate_template(&x0, |t| Vec3::new(fx * (5.0 * t).sin(), 0.0, 0.0), &settings(mb, me), 1e-3, 1.0).unwrap();
        for p in &traj {
            prop_assert_eq!(p.xb.y, x0.xb.y);
            prop_assert_eq!(p.xb.z, x0.xb.z);
            prop_assert_eq!(p.xe.y, x0.xe.y);
            prop_assert_eq!(p.xe.z, x0.xe.z);
        }
    }
}
