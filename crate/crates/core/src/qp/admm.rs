//! Operator-splitting solver in the OSQP form: the constraints are stacked as
//! `K = [A; C]` with `l <= K x <= u` (equal bounds on the equality rows) and
//! iterated with over-relaxed ADMM on the Ruiz-scaled data. Every
//! `check_interval` iterations the iterate is tested against the KKT residual
//! contract, refined by an active-set polish, tested for a primal
//! infeasibility certificate and the step size is adapted.

use nalgebra::{DMatrix, DVector};

use super::dual_active_set;
use super::polish::{guess_active_set, polish, PolishData};
use super::scaling::Scaling;
use super::{kkt_residuals, QpError, QpProblem, QpSolution, QpStatus, Residuals, INFINITY};

#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub check_interval: usize,
    pub scaling_iterations: usize,
    pub polish: bool,
    pub polish_delta: f64,
    pub polish_corrections: usize,
    pub infeasibility_tol: f64,
    /// Re-solve with the exact dual active-set method when ADMM stalls or
    /// reports infeasibility.
    pub active_set_fallback: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 4000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            check_interval: 25,
            scaling_iterations: 10,
            polish: true,
            polish_delta: 1e-9,
            polish_corrections: 10,
            infeasibility_tol: 1e-6,
            active_set_fallback: true,
        }
    }
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_EQ_FACTOR: f64 = 1e3;

#[derive(Debug, Clone)]
struct WarmStart {
    x: DVector<f64>,
    y: DVector<f64>,
    rho: f64,
}

/// Solver instance; keeps the previous solution and step size to warm start
/// the next problem of the same dimensions.
#[derive(Debug, Clone)]
pub struct QpSolver {
    settings: QpSettings,
    warm: Option<WarmStart>,
}

enum Factor {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(m: DMatrix<f64>) -> Self {
        match m.clone().cholesky() {
            Some(c) => Factor::Cholesky(c),
            None => Factor::Lu(m.lu()),
        }
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Cholesky(c) => c.solve(b),
            Factor::Lu(l) => l.solve(b).unwrap_or_else(|| DVector::zeros(b.len())),
        }
    }
}

struct Scaled {
    h: DMatrix<f64>,
    g: DVector<f64>,
    k: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    scaling: Scaling,
    m_eq: usize,
}

impl Scaled {
    fn new(p: &QpProblem, iterations: usize) -> Self {
        let n = p.n();
        let (me, mi) = (p.n_eq(), p.n_ineq());
        let m = me + mi;
        let mut k = DMatrix::zeros(m, n);
        k.view_mut((0, 0), (me, n)).copy_from(&p.a);
        k.view_mut((me, 0), (mi, n)).copy_from(&p.c);
        let inf = |v: f64| {
            if v >= INFINITY {
                f64::INFINITY
            } else if v <= -INFINITY {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        let mut l = DVector::zeros(m);
        let mut u = DVector::zeros(m);
        for i in 0..me {
            l[i] = p.b[i];
            u[i] = p.b[i];
        }
        for i in 0..mi {
            l[me + i] = inf(p.lower[i]);
            u[me + i] = inf(p.upper[i]);
        }
        let mut h = p.h.clone();
        let mut g = p.g.clone();
        let scaling = Scaling::equilibrate(&mut h, &mut g, &mut k, iterations);
        l.component_mul_assign(&scaling.e);
        u.component_mul_assign(&scaling.e);
        Self {
            h,
            g,
            k,
            l,
            u,
            scaling,
            m_eq: me,
        }
    }

    fn unscale(&self, x: &DVector<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let s = &self.scaling;
        (x.component_mul(&s.d), y.component_mul(&s.e) / s.c)
    }

    fn scale(&self, x: &DVector<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let s = &self.scaling;
        (x.component_div(&s.d), y.component_div(&s.e) * s.c)
    }

    fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(v.len(), |i, _| v[i].clamp(self.l[i], self.u[i]))
    }

    fn rho_vector(&self, rho: f64) -> DVector<f64> {
        DVector::from_fn(self.l.len(), |i, _| {
            if self.l[i] == self.u[i] {
                RHO_EQ_FACTOR * rho
            } else if self.l[i].is_infinite() && self.u[i].is_infinite() {
                RHO_MIN
            } else {
                rho
            }
        })
    }

    fn factor(&self, sigma: f64, rho: &DVector<f64>) -> Factor {
        let n = self.g.len();
        let mut kr = self.k.clone();
        for (i, mut row) in kr.row_iter_mut().enumerate() {
            row *= rho[i];
        }
        let mut p = &self.h + self.k.transpose() * kr;
        for i in 0..n {
            p[(i, i)] += sigma;
        }
        Factor::new(p)
    }
}

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self { settings, warm: None }
    }

    pub fn settings(&self) -> &QpSettings {
        &self.settings
    }

    /// Forgets the warm-start state.
    pub fn reset(&mut self) {
        self.warm = None;
    }

    fn package(&self, p: &QpProblem, sd: &Scaled, x: &DVector<f64>, y: &DVector<f64>, status: QpStatus, iterations: usize) -> QpSolution {
        let (x, y) = sd.unscale(x, y);
        let y_eq = y.rows(0, sd.m_eq).into_owned();
        let z_ineq = y.rows(sd.m_eq, p.n_ineq()).into_owned();
        let residuals = kkt_residuals(p, &x, &y_eq, &z_ineq);
        QpSolution {
            x,
            y_eq,
            z_ineq,
            status,
            residuals,
            iterations,
        }
    }

    fn evaluate(&self, p: &QpProblem, sd: &Scaled, x: &DVector<f64>, y: &DVector<f64>) -> Residuals {
        let (x, y) = sd.unscale(x, y);
        kkt_residuals(p, &x, &y.rows(0, sd.m_eq).into_owned(), &y.rows(sd.m_eq, p.n_ineq()).into_owned())
    }

    fn try_polish(&self, p: &QpProblem, sd: &Scaled, z: &DVector<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        if !self.settings.polish {
            return None;
        }
        let data = PolishData {
            h: &sd.h,
            g: &sd.g,
            k: &sd.k,
            l: &sd.l,
            u: &sd.u,
        };
        let sides = guess_active_set(&data, z, y);
        let (xp, yp) = polish(&data, sides, self.settings.polish_delta, self.settings.polish_corrections, 1e-12)?;
        (self.evaluate(p, sd, &xp, &yp).max() <= self.settings.tol).then_some((xp, yp))
    }

    /// Unscaled primal infeasibility certificate test on the dual increment.
    fn infeasible(&self, p: &QpProblem, sd: &Scaled, dy: &DVector<f64>) -> bool {
        let dy = dy.component_mul(&sd.scaling.e) / sd.scaling.c;
        let norm = dy.amax();
        if norm < 1e-30 {
            return false;
        }
        let eps = self.settings.infeasibility_tol * norm;
        let mut support = 0.0;
        for i in 0..dy.len() {
            let (l, u) = (sd.l[i] / sd.scaling.e[i], sd.u[i] / sd.scaling.e[i]);
            if dy[i] > 0.0 {
                if u.is_infinite() {
                    if dy[i] > eps {
                        return false;
                    }
                    continue;
                }
                support += u * dy[i];
            } else if dy[i] < 0.0 {
                if l.is_infinite() {
                    if -dy[i] > eps {
                        return false;
                    }
                    continue;
                }
                support += l * dy[i];
            }
        }
        let me = sd.m_eq;
        let kty = p.a.transpose() * dy.rows(0, me) + p.c.transpose() * dy.rows(me, p.n_ineq());
        kty.amax() <= eps && support < -eps
    }

    /// Replaces a non-optimal ADMM result by the active-set solution when
    /// the latter meets the residual tolerance; otherwise keeps `sol`.
    fn fallback(&self, p: &QpProblem, sol: QpSolution) -> QpSolution {
        if !self.settings.active_set_fallback {
            return sol;
        }
        let Some(r) = dual_active_set::solve(p, 1e-10) else {
            return sol;
        };
        let residuals = kkt_residuals(p, &r.x, &r.y_eq, &r.z_ineq);

        if residuals.max() > self.settings.tol {
            return sol;
        }
        QpSolution {
            x: r.x,
            y_eq: r.y_eq,
            z_ineq: r.z_ineq,
            status: QpStatus::Optimal,
            residuals,
            iterations: sol.iterations + r.iterations,
        }
    }

    pub fn solve(&mut self, p: &QpProblem) -> Result<QpSolution, QpError> {
        p.validate()?;
        let st = self.settings.clone();
        let sd = Scaled::new(p, st.scaling_iterations);
        let n = p.n();
        let m = sd.l.len();

        let warm = self.warm.as_ref().filter(|w| w.x.len() == n && w.y.len() == m).cloned();
        let mut rho = warm.as_ref().map_or(st.rho, |w| w.rho);
        let (mut x, mut y) = match &warm {
            Some(w) => sd.scale(&w.x, &w.y),
            None => (DVector::zeros(n), DVector::zeros(m)),
        };
        let mut z = sd.project(&(&sd.k * &x));

        let finish = |solver: &mut Self, sol: QpSolution, rho: f64| {
            if sol.status != QpStatus::Infeasible {
                let mut y = DVector::zeros(m);
                y.rows_mut(0, sd.m_eq).copy_from(&sol.y_eq);
                y.rows_mut(sd.m_eq, p.n_ineq()).copy_from(&sol.z_ineq);
                solver.warm = Some(WarmStart { x: sol.x.clone(), y, rho });
            } else {
                solver.warm = None;
            }
            Ok(sol)
        };

        if warm.is_some() {
            if self.evaluate(p, &sd, &x, &y).max() <= st.tol {
                let sol = self.package(p, &sd, &x, &y, QpStatus::Optimal, 0);
                return finish(self, sol, rho);
            }
            if let Some((xp, yp)) = self.try_polish(p, &sd, &z, &y) {
                let sol = self.package(p, &sd, &xp, &yp, QpStatus::Optimal, 0);
                return finish(self, sol, rho);
            }
        }

        let mut rho_vec = sd.rho_vector(rho);
        let mut factor = sd.factor(st.sigma, &rho_vec);
        let kt = sd.k.transpose();
        for it in 1..=st.max_iter {
            let rhs = &x * st.sigma - &sd.g + &kt * (rho_vec.component_mul(&z) - &y);
            let xt = factor.solve(&rhs);
            let zt = &sd.k * &xt;
            let x_new = &xt * st.alpha + &x * (1.0 - st.alpha);
            let zr = &zt * st.alpha + &z * (1.0 - st.alpha);
            let z_new = sd.project(&(&zr + y.component_div(&rho_vec)));
            let y_new = &y + rho_vec.component_mul(&(&zr - &z_new));
            let dy = &y_new - &y;
            x = x_new;
            z = z_new;
            y = y_new;

            if it % st.check_interval != 0 && it != st.max_iter {
                continue;
            }
            if self.evaluate(p, &sd, &x, &y).max() <= st.tol {
                let sol = self.package(p, &sd, &x, &y, QpStatus::Optimal, it);
                return finish(self, sol, rho);
            }
            if let Some((xp, yp)) = self.try_polish(p, &sd, &z, &y) {
                let sol = self.package(p, &sd, &xp, &yp, QpStatus::Optimal, it);
                return finish(self, sol, rho);
            }
            if self.infeasible(p, &sd, &dy) {
                let sol = self.package(p, &sd, &x, &y, QpStatus::Infeasible, it);
                let sol = self.fallback(p, sol);
                return finish(self, sol, rho);
            }

            // step-size adaptation on scaled residual ratios
            let kx = &sd.k * &x;
            let prim = (&kx - &z).amax() / kx.amax().max(z.amax()).max(1e-30);
            let hx = &sd.h * &x;
            let kty = &kt * &y;
            let dual = (&hx + &sd.g + &kty).amax() / hx.amax().max(sd.g.amax()).max(kty.amax()).max(1e-30);
            let proposed = (rho * (prim / dual.max(1e-30)).sqrt()).clamp(RHO_MIN, RHO_MAX);
            if proposed > 5.0 * rho || proposed < 0.2 * rho {
                rho = proposed;
                rho_vec = sd.rho_vector(rho);
                factor = sd.factor(st.sigma, &rho_vec);
            }
        }
        let sol = self.package(p, &sd, &x, &y, QpStatus::MaxIterations, st.max_iter);
        let sol = self.fallback(p, sol);
        finish(self, sol, rho)
    }
}

#[cfg(test)]
mod tests {
    use super::super::solve;
    use super::*;

    fn boxed(h: f64, g: f64, lo: f64, hi: f64) -> QpProblem {
        let mut p = QpProblem::unconstrained(DMatrix::from_element(1, 1, h), DVector::from_element(1, g));
        p.c = DMatrix::identity(1, 1);
        p.lower = DVector::from_element(1, lo);
        p.upper = DVector::from_element(1, hi);
        p
    }

    #[test]
    fn unconstrained_minimum() {
        let c = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let p = QpProblem::unconstrained(DMatrix::identity(3, 3), -&c);
        let sol = solve(&p, 1e-9, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x - c).amax() < 1e-8);
    }

    #[test]
    fn equality_constrained_minimum() {
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2));
        p.a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        p.b = DVector::from_element(1, 1.0);
        let sol = solve(&p, 1e-9, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-8 && (sol.x[1] - 0.5).abs() < 1e-8);
        assert!((sol.y_eq[0] + 1.0).abs() < 1e-7);
    }

    #[test]
    fn active_upper_bound_has_positive_dual() {
        let sol = solve(&boxed(2.0, -4.0, 0.0, 1.0), 1e-9, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-8);
        assert!((sol.z_ineq[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        p.c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        p.lower = DVector::from_vec(vec![1.0, -INFINITY]);
        p.upper = DVector::from_vec(vec![INFINITY, -1.0]);
        let sol = solve(&p, 1e-6, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut p = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -1.0]));
        p.c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        p.lower = DVector::from_element(1, -INFINITY);
        p.upper = DVector::from_element(1, 0.5);
        let mut solver = QpSolver::new(QpSettings {
            max_iter: 3,
            polish: false,
            active_set_fallback: false,
            tol: 1e-12,
            ..QpSettings::default()
        });
        let sol = solver.solve(&p).unwrap();
        assert_eq!(sol.status, QpStatus::MaxIterations);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn warm_start_reuses_previous_solution() {
        let p = boxed(2.0, -4.0, 0.0, 1.0);
        let mut solver = QpSolver::new(QpSettings::default());
        let first = solver.solve(&p).unwrap();
        let second = solver.solve(&p).unwrap();
        assert_eq!(second.status, QpStatus::Optimal);
        assert_eq!(second.iterations, 0);
        assert!((first.x - second.x).amax() < 1e-9);
    }
}
