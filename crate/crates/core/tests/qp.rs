use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qwbc::qp::{kkt_residuals, solve, QpProblem, QpSettings, QpSolver, QpStatus};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64, n: usize, me: usize, mi: usize) -> QpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let l = DMatrix::from_fn(n, n, |_, _| r(-1.0, 1.0));
    let h = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let g = DVector::from_fn(n, |_, _| r(-5.0, 5.0));
    let a = DMatrix::from_fn(me, n, |_, _| r(-1.0, 1.0));
    let x0 = DVector::from_fn(n, |_, _| r(-1.0, 1.0));
    let b = &a * &x0;
    let c = DMatrix::from_fn(mi, n, |_, _| r(-1.0, 1.0));
    let cx = &c * &x0;
    let lower = DVector::from_fn(mi, |i, _| cx[i] - r(0.0, 0.5));
    let upper = DVector::from_fn(mi, |i, _| cx[i] + r(0.0, 0.5));
    QpProblem { h, g, a, b, c, lower, upper }
}

/// Enumerates every active set and keeps the best feasible KKT point.
fn brute_force(p: &QpProblem) -> DVector<f64> {
    let n = p.n();
    let mi = p.n_ineq();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(mi as u32) {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..p.n_eq() {
            rows.push(p.a.row(i).into_owned());
            rhs.push(p.b[i]);
        }
        let mut c = code;
        for i in 0..mi {
            match c % 3 {
                1 => {
                    rows.push(p.c.row(i).into_owned());
                    rhs.push(p.lower[i]);
                }
                2 => {
                    rows.push(p.c.row(i).into_owned());
                    rhs.push(p.upper[i]);
                }
                _ => {}
            }
            c /= 3;
        }
        let na = rows.len();
        let mut kkt = DMatrix::zeros(n + na, n + na);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.h);
        let mut full = DVector::zeros(n + na);
        full.rows_mut(0, n).copy_from(&(-&p.g));
        for (k, row) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[(n + k, j)] = row[j];
                kkt[(j, n + k)] = row[j];
            }
            full[n + k] = rhs[k];
        }
        let Some(sol) = kkt.lu().solve(&full) else { continue };
        let x = sol.rows(0, n).into_owned();
        let feasible = (&p.a * &x - &p.b).amax() < 1e-9
            && (&p.c * &x - &p.lower).min() > -1e-9
            && (&p.upper - &p.c * &x).min() > -1e-9;
        if !feasible {
            continue;
        }
        let f = p.objective(&x);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    }
    best.expect("feasible by construction").1
}

#[test]
fn zero_dimensional_inequality_block_has_zero_residuals() {
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0]));
    let sol = solve(&p, 1e-8, 4000).unwrap();
    assert_eq!(sol.residuals.primal_inequality, 0.0);
    assert_eq!(sol.residuals.complementarity, 0.0);
}

#[test]
fn optimal_solutions_meet_the_residual_contract() {
    for seed in 0..200 {
        let p = random_problem(seed, 6, 2, 5);
        let sol = solve(&p, 1e-6, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "seed {seed}");
        assert!(sol.residuals.max() <= 1e-6, "seed {seed}: {:?}", sol.residuals);
        let again = kkt_residuals(&p, &sol.x, &sol.y_eq, &sol.z_ineq);
        assert_eq!(again, sol.residuals);
    }
}

#[test]
fn warm_start_on_a_drifting_sequence_is_not_slower() {
    let mut warm = QpSolver::new(QpSettings::default());
    let (mut w_total, mut c_total) = (0usize, 0usize);
    let base = random_problem(11, 8, 2, 8);
    for k in 0..50 {
        let mut p = base.clone();
        p.g += DVector::from_fn(8, |i, _| 0.05 * ((k + i) as f64 * 0.3).sin());
        let ws = warm.solve(&p).unwrap();
        let cs = solve(&p, 1e-6, 4000).unwrap();
        assert_eq!(ws.status, QpStatus::Optimal);
        assert!((ws.x - cs.x).amax() < 1e-5);
        w_total += ws.iterations;
        c_total += cs.iterations;
    }
    assert!(w_total <= 2 * c_total.max(1), "warm {w_total} cold {c_total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_brute_force_active_set(seed in any::<u64>()) {
        let p = random_problem(seed, 4, 1, 4);
        let sol = solve(&p, 1e-9, 4000).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let oracle = brute_force(&p);
        prop_assert!((&sol.x - &oracle).amax() < 1e-6, "{} vs {}", sol.x, oracle);
    }

    #[test]
    fn cost_scaling_leaves_optimum_unchanged(seed in any::<u64>(), alpha in 1e-3..1e3f64) {
        let p = random_problem(seed, 5, 1, 4);
        let mut q = p.clone();
        q.h *= alpha;
        q.g *= alpha;
        let a = solve(&p, 1e-9, 4000).unwrap();
        let b = solve(&q, 1e-9, 4000).unwrap();
        prop_assert_eq!(a.status, QpStatus::Optimal);
        prop_assert_eq!(b.status, QpStatus::Optimal);
        prop_assert!((a.x - b.x).amax() < 1e-8);
    }
}

fn exact_only() -> QpSolver {
    QpSolver::new(QpSettings {
        max_iter: 1,
        polish: false,
        tol: 1e-9,
        ..QpSettings::default()
    })
}

#[test]
fn exact_fallback_recovers_a_stalled_solve() {
    let p = random_problem(3, 6, 2, 6);
    let sol = exact_only().solve(&p).unwrap();
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!(sol.residuals.max() <= 1e-9, "{:?}", sol.residuals);
    let mut off = QpSolver::new(QpSettings {
        max_iter: 1,
        polish: false,
        tol: 1e-9,
        active_set_fallback: false,
        ..QpSettings::default()
    });
    assert_eq!(off.solve(&p).unwrap().status, QpStatus::MaxIterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_fallback_matches_brute_force_on_badly_scaled_problems(
        seed in any::<u64>(),
        exps in proptest::collection::vec(-4.0..4.0f64, 4),
    ) {
        let mut p = random_problem(seed, 4, 1, 4);
        // x = S x' with widely spread S
        let s = DMatrix::from_diagonal(&DVector::from_iterator(4, exps.iter().map(|e| 10f64.powf(*e))));
        p.h = &s * &p.h * &s;
        p.g = &s * &p.g;
        p.a = &p.a * &s;
        p.c = &p.c * &s;
        let sol = exact_only().solve(&p).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let oracle = brute_force(&p);
        let rel = (&s * (&sol.x - &oracle)).amax();
        prop_assert!(rel < 1e-7, "{} vs {}", sol.x, oracle);
    }
}
