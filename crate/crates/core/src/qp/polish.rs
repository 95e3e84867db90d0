//! Active-set refinement of an approximate ADMM solution: guess which bounds
//! are active, solve the equality-constrained KKT system exactly, and correct
//! the guess until primal and dual signs agree.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Inactive,
    Lower,
    Upper,
    /// `l == u`, always active.
    Fixed,
}

pub(crate) struct PolishData<'a> {
    pub h: &'a DMatrix<f64>,
    pub g: &'a DVector<f64>,
    pub k: &'a DMatrix<f64>,
    pub l: &'a DVector<f64>,
    pub u: &'a DVector<f64>,
}

/// Initial active-set guess from an ADMM iterate (`z` is the projected
/// constraint value, `y` the dual).
pub(crate) fn guess_active_set(d: &PolishData, z: &DVector<f64>, y: &DVector<f64>) -> Vec<Side> {
    (0..d.l.len())
        .map(|i| {
            if d.l[i] == d.u[i] {
                Side::Fixed
            } else if d.l[i].is_finite() && z[i] - d.l[i] < -y[i] {
                Side::Lower
            } else if d.u[i].is_finite() && d.u[i] - z[i] < y[i] {
                Side::Upper
            } else {
                Side::Inactive
            }
        })
        .collect()
}

fn solve_reduced(d: &PolishData, active: &[usize], target: &DVector<f64>, delta: f64) -> Option<DVector<f64>> {
    let n = d.g.len();
    let na = active.len();
    let mut kkt = DMatrix::zeros(n + na, n + na);
    kkt.view_mut((0, 0), (n, n)).copy_from(d.h);
    for (r, &i) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = d.k[(i, j)];
            kkt[(j, n + r)] = d.k[(i, j)];
        }
    }
    let mut rhs = DVector::zeros(n + na);
    rhs.rows_mut(0, n).copy_from(&(-d.g));
    rhs.rows_mut(n, na).copy_from(target);

    let mut reg = kkt.clone();
    for i in 0..n {
        reg[(i, i)] += delta;
    }
    for i in n..n + na {
        reg[(i, i)] -= delta;
    }
    let lu = reg.lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..5 {
        let r = &rhs - &kkt * &sol;
        if r.amax() < 1e-14 * rhs.amax().max(1.0) {
            break;
        }
        sol += lu.solve(&r)?;
    }
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Returns the refined `(x, y)` (scaled space) or `None` when the reduced
/// system cannot be solved.
pub(crate) fn polish(
    d: &PolishData,
    mut sides: Vec<Side>,
    delta: f64,
    max_corrections: usize,
    feas_tol: f64,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = d.g.len();
    let m = d.l.len();
    let mut best = None;
    for _ in 0..=max_corrections {
        let active: Vec<usize> = (0..m).filter(|&i| sides[i] != Side::Inactive).collect();
        let target = DVector::from_iterator(
            active.len(),
            active.iter().map(|&i| match sides[i] {
                Side::Upper => d.u[i],
                _ => d.l[i],
            }),
        );
        let sol = solve_reduced(d, &active, &target, delta)?;
        let x = sol.rows(0, n).into_owned();
        let mut y = DVector::zeros(m);
        for (r, &i) in active.iter().enumerate() {
            y[i] = sol[n + r];
        }
        let kx = d.k * &x;
        let mut changed = false;
        for i in 0..m {
            let next = match sides[i] {
                Side::Fixed => Side::Fixed,
                Side::Lower if y[i] > 0.0 => Side::Inactive,
                Side::Upper if y[i] < 0.0 => Side::Inactive,
                Side::Inactive if kx[i] < d.l[i] - feas_tol * d.l[i].abs().max(1.0) => Side::Lower,
                Side::Inactive if kx[i] > d.u[i] + feas_tol * d.u[i].abs().max(1.0) => Side::Upper,
                s => s,
            };
            if next != sides[i] {
                sides[i] = next;
                changed = true;
            }
        }
        best = Some((x, y));
        if !changed {
            break;
        }
    }
    best
}
