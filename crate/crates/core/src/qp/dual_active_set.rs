//! Goldfarb-Idnani dual active-set method for strictly convex problems.
//!
//! Starting from the unconstrained minimum, the most violated constraint is
//! added at each major step while dual feasibility is maintained, dropping
//! blocking constraints along the way. The active-set factorization is kept
//! as `J` (with `J^T H J = I`) and upper-triangular `R`, updated with Givens
//! rotations. Finite termination holds for strictly convex `H`.
//!
//! Variables are Jacobi-scaled and constraint normals normalized before the
//! iteration so the factorization sees an O(1) Hessian diagonal.

use nalgebra::{DMatrix, DVector};

use super::{QpProblem, INFINITY};

pub(crate) struct ActiveSetResult {
    pub x: DVector<f64>,
    pub y_eq: DVector<f64>,
    pub z_ineq: DVector<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Equality(usize),
    Lower(usize),
    Upper(usize),
}

struct Constraints {
    /// Unit normals in scaled variables, one column each.
    normals: DMatrix<f64>,
    /// Offsets: the constraint reads `n^T x~ + c >= 0` (or `= 0`).
    offsets: DVector<f64>,
    /// Normalization factor `rho` mapping multipliers back: `u = u~ / rho`.
    norms: Vec<f64>,
    kinds: Vec<Kind>,
    n_eq: usize,
}

fn build(p: &QpProblem, d: &DVector<f64>) -> Constraints {
    let n = p.n();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut offsets = Vec::new();
    let mut norms = Vec::new();
    let mut kinds = Vec::new();
    let mut push = |row: DVector<f64>, offset: f64, kind: Kind| {
        let scaled = row.component_mul(d);
        let rho = scaled.norm().max(1e-300);
        cols.push(scaled / rho);
        offsets.push(offset / rho);
        norms.push(rho);
        kinds.push(kind);
    };
    for i in 0..p.n_eq() {
        push(p.a.row(i).transpose(), -p.b[i], Kind::Equality(i));
    }
    let n_eq = p.n_eq();
    for i in 0..p.n_ineq() {
        let row = p.c.row(i).transpose();
        if p.lower[i] > -INFINITY {
            push(row.clone(), -p.lower[i], Kind::Lower(i));
        }
        if p.upper[i] < INFINITY {
            push(-row, p.upper[i], Kind::Upper(i));
        }
    }
    let m = cols.len();
    let mut normals = DMatrix::zeros(n, m);
    for (j, c) in cols.iter().enumerate() {
        normals.set_column(j, c);
    }
    Constraints {
        normals,
        offsets: DVector::from_vec(offsets),
        norms,
        kinds,
        n_eq,
    }
}

struct Factorization {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    r_norm: f64,
    n: usize,
}

impl Factorization {
    /// `z = J[:, iq..] d[iq..]`.
    fn step_direction(&self, d: &DVector<f64>, iq: usize) -> DVector<f64> {
        let mut z = DVector::zeros(self.n);
        for j in iq..self.n {
            z.axpy(d[j], &self.j.column(j), 1.0);
        }
        z
    }

    /// Solves `R[..iq, ..iq] r = d[..iq]`.
    fn dual_direction(&self, d: &DVector<f64>, iq: usize) -> DVector<f64> {
        let mut r = DVector::zeros(iq);
        for i in (0..iq).rev() {
            let mut s = d[i];
            for j in i + 1..iq {
                s -= self.r[(i, j)] * r[j];
            }
            r[i] = s / self.r[(i, i)];
        }
        r
    }

    /// Appends a constraint whose `J^T n` is `d`; false when it is linearly
    /// dependent on the active set.
    fn add(&mut self, d: &mut DVector<f64>, iq: &mut usize) -> bool {
        let n = self.n;
        for j in (*iq + 1..n).rev() {
            let (mut cc, mut ss) = (d[j - 1], d[j]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[j] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[j - 1] = -h;
            } else {
                d[j - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, j - 1)];
                let t2 = self.j[(k, j)];
                self.j[(k, j - 1)] = t1 * cc + t2 * ss;
                self.j[(k, j)] = xny * (t1 + self.j[(k, j - 1)]) - t2;
            }
        }
        *iq += 1;
        for i in 0..*iq {
            self.r[(i, *iq - 1)] = d[i];
        }
        let diag = d[*iq - 1].abs();
        if diag <= f64::EPSILON * self.r_norm {
            return false;
        }
        self.r_norm = self.r_norm.max(diag);
        true
    }

    /// Removes the active constraint at position `qq` and restores the
    /// triangular structure.
    fn remove(&mut self, qq: usize, iq: &mut usize) {
        let n = self.n;
        for i in qq..*iq - 1 {
            for k in 0..n {
                self.r[(k, i)] = self.r[(k, i + 1)];
            }
        }
        for k in 0..n {
            self.r[(k, *iq - 1)] = 0.0;
        }
        *iq -= 1;
        for j in qq..*iq {
            let (mut cc, mut ss) = (self.r[(j, j)], self.r[(j + 1, j)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(j + 1, j)] = 0.0;
            if cc < 0.0 {
                self.r[(j, j)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(j, j)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in j + 1..*iq {
                let t1 = self.r[(j, k)];
                let t2 = self.r[(j + 1, k)];
                self.r[(j, k)] = t1 * cc + t2 * ss;
                self.r[(j + 1, k)] = xny * (t1 + self.r[(j, k)]) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, j)];
                let t2 = self.j[(k, j + 1)];
                self.j[(k, j)] = t1 * cc + t2 * ss;
                self.j[(k, j + 1)] = xny * (self.j[(k, j)] + t1) - t2;
            }
        }
    }
}

/// Exact solve; `None` when `H` is not positive definite, the equality rows
/// are dependent, a degenerate step occurs, the problem is infeasible or the
/// major-step cap is reached.
pub(crate) fn solve(p: &QpProblem, feasibility_tol: f64) -> Option<ActiveSetResult> {
    let n = p.n();
    let d = DVector::from_iterator(n, (0..n).map(|i| {
        let h = p.h[(i, i)];
        if h > 0.0 { 1.0 / h.sqrt() } else { 1.0 }
    }));
    let h = DMatrix::from_fn(n, n, |i, j| p.h[(i, j)] * d[i] * d[j]);
    let g = p.g.component_mul(&d);
    let cons = build(p, &d);
    let m = cons.kinds.len();

    let chol = h.clone().cholesky()?;
    let l = chol.l();
    let j = l.transpose().solve_upper_triangular(&DMatrix::identity(n, n))?;
    let mut f = Factorization {
        j,
        r: DMatrix::zeros(n, n),
        r_norm: 1.0,
        n,
    };
    let mut x = -chol.solve(&g);
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n + 1);
    let mut iq = 0usize;
    let mut is_active = vec![false; m];
    let mut iterations = 0usize;
    let cap = 10 * (n + m) + 100;

    for i in 0..cons.n_eq {
        let np = cons.normals.column(i).into_owned();
        let mut dv = f.j.transpose() * &np;
        let z = f.step_direction(&dv, iq);
        let r = f.dual_direction(&dv, iq);
        let znp = z.dot(&np);
        let t2 = if znp.abs() > f64::EPSILON { -(np.dot(&x) + cons.offsets[i]) / znp } else { 0.0 };
        x.axpy(t2, &z, 1.0);
        for k in 0..iq {
            u[k] -= t2 * r[k];
        }
        u.push(t2);
        active.push(i);
        is_active[i] = true;
        if !f.add(&mut dv, &mut iq) {
            return None;
        }
        iterations += 1;
    }

    let slack = |x: &DVector<f64>, k: usize| cons.normals.column(k).dot(x) + cons.offsets[k];
    loop {
        if iterations > cap {
            return None;
        }
        // most violated inactive constraint
        let mut ip = None;
        let mut worst = -feasibility_tol;
        for k in cons.n_eq..m {
            if is_active[k] {
                continue;
            }
            let s = slack(&x, k);
            if s < worst {
                worst = s;
                ip = Some(k);
            }
        }
        let Some(ip) = ip else { break };
        let np = cons.normals.column(ip).into_owned();
        let mut u_plus = 0.0;
        let mut s_ip = worst;
        loop {
            iterations += 1;
            if iterations > cap {
                return None;
            }
            let mut dv = f.j.transpose() * &np;
            let z = f.step_direction(&dv, iq);
            let r = f.dual_direction(&dv, iq);
            // largest dual step keeping active inequality multipliers >= 0
            let mut t1 = f64::INFINITY;
            let mut blocking = None;
            for k in cons.n_eq..iq {
                if r[k] > 0.0 {
                    let t = u[k] / r[k];
                    if t < t1 {
                        t1 = t;
                        blocking = Some(k);
                    }
                }
            }
            let znp = z.dot(&np);
            let t2 = if z.norm_squared() > f64::EPSILON * f64::EPSILON && znp.abs() > 0.0 {
                -s_ip / znp
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return None;
            }
            for k in 0..iq {
                u[k] -= t * r[k];
            }
            u_plus += t;
            if t2.is_finite() {
                x.axpy(t, &z, 1.0);
            }
            if t2.is_finite() && t2 <= t1 {
                u.push(u_plus);
                active.push(ip);
                if !f.add(&mut dv, &mut iq) {
                    return None;
                }
                is_active[ip] = true;
                break;
            }
            let qq = blocking?;
            is_active[active[qq]] = false;
            active.remove(qq);
            u.remove(qq);
            f.remove(qq, &mut iq);
            s_ip = slack(&x, ip);
        }
    }

    let xs = x.component_mul(&d);
    let mult: Vec<f64> = active.iter().enumerate().map(|(pos, &k)| u[pos] / cons.norms[k]).collect();
    let (xs, mult) = refine(p, &cons.kinds, &active, xs, mult);
    let mut y_eq = DVector::zeros(p.n_eq());
    let mut z_ineq = DVector::zeros(p.n_ineq());
    for (pos, &k) in active.iter().enumerate() {
        match cons.kinds[k] {
            Kind::Equality(i) => y_eq[i] = -mult[pos],
            Kind::Lower(i) => z_ineq[i] -= mult[pos],
            Kind::Upper(i) => z_ineq[i] += mult[pos],
        }
    }
    Some(ActiveSetResult {
        x: xs,
        y_eq,
        z_ineq,
        iterations,
    })
}

/// Iterative refinement on the unscaled KKT system of the final active set,
/// `H x + g = sum_k u_k n_k` and `n_k^T x = r_k`, recovering the absolute
/// accuracy lost to scaling when the data are large.
fn refine(p: &QpProblem, kinds: &[Kind], active: &[usize], mut x: DVector<f64>, mut u: Vec<f64>) -> (DVector<f64>, Vec<f64>) {
    let n = p.n();
    let na = active.len();
    let mut rows = DMatrix::zeros(na, n);
    let mut rhs = DVector::zeros(na);
    for (pos, &k) in active.iter().enumerate() {
        let (row, r) = match kinds[k] {
            Kind::Equality(i) => (p.a.row(i).into_owned(), p.b[i]),
            Kind::Lower(i) => (p.c.row(i).into_owned(), p.lower[i]),
            Kind::Upper(i) => (-p.c.row(i), -p.upper[i]),
        };
        rows.set_row(pos, &row);
        rhs[pos] = r;
    }
    let mut kkt = DMatrix::zeros(n + na, n + na);
    kkt.view_mut((0, 0), (n, n)).copy_from(&p.h);
    kkt.view_mut((0, n), (n, na)).copy_from(&(-rows.transpose()));
    kkt.view_mut((n, 0), (na, n)).copy_from(&rows);
    let lu = kkt.lu();
    for _ in 0..3 {
        let uv = DVector::from_column_slice(&u);
        let mut r = DVector::zeros(n + na);
        r.rows_mut(0, n).copy_from(&(&p.h * &x + &p.g - rows.transpose() * &uv));
        r.rows_mut(n, na).copy_from(&(&rows * &x - &rhs));
        let Some(step) = lu.solve(&(-r)) else { break };
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
        x += step.rows(0, n);
        for (k, v) in u.iter_mut().enumerate() {
            *v += step[n + k];
        }
    }
    (x, u)
}
