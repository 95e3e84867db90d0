//! Dense convex quadratic programs
//!
//! ```text
//! minimize   1/2 x^T H x + g^T x
//! subject to A x = b,   lower <= C x <= upper
//! ```
//!
//! Dual variables follow the Lagrangian
//! `L = 1/2 x^T H x + g^T x + y^T (A x - b) + z^T C x`, so a positive `z_i`
//! marks an active upper bound and a negative one an active lower bound.
//! Bounds with magnitude at or above [`INFINITY`] are treated as absent.

mod admm;
mod dual_active_set;
mod polish;
mod scaling;

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use admm::{QpSettings, QpSolver};

/// Bound magnitude treated as unbounded.
pub const INFINITY: f64 = 1e20;

#[derive(Debug, Error, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("inequality row {row} has lower bound {lower} above upper bound {upper}")]
    Bounds { row: usize, lower: f64, upper: f64 },
    #[error("problem data contains NaN")]
    NotANumber,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem with `n` variables.
    pub fn unconstrained(h: DMatrix<f64>, g: DVector<f64>) -> Self {
        let n = g.len();
        Self {
            h,
            g,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            c: DMatrix::zeros(0, n),
            lower: DVector::zeros(0),
            upper: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.n();
        let dim = |what: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(QpError::Dimension(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1)))
            }
        };
        dim("H", self.h.shape(), (n, n))?;
        dim("A", self.a.shape(), (self.n_eq(), n))?;
        dim("C", self.c.shape(), (self.n_ineq(), n))?;
        dim("upper", (self.upper.len(), 1), (self.n_ineq(), 1))?;
        let has_nan = self.h.iter().chain(self.g.iter()).chain(self.a.iter()).chain(self.b.iter()).chain(self.c.iter())
            .chain(self.lower.iter()).chain(self.upper.iter())
            .any(|v| v.is_nan());
        if has_nan {
            return Err(QpError::NotANumber);
        }
        let asym = (&self.h - self.h.transpose()).amax();
        if asym > 1e-12 * self.h.amax().max(1.0) {
            return Err(QpError::Asymmetric(asym));
        }
        for (row, (&lower, &upper)) in self.lower.iter().zip(self.upper.iter()).enumerate() {
            if lower > upper {
                return Err(QpError::Bounds { row, lower, upper });
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    /// Dense text dump: a `<name> <rows> <cols>` header per block followed by
    /// one matrix row per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        let blocks: [(&str, &DMatrix<f64>); 3] = [("H", &self.h), ("A", &self.a), ("C", &self.c)];
        for (name, m) in blocks {
            write_block(&mut w, name, m.nrows(), m.ncols(), |i, j| m[(i, j)])?;
        }
        let vectors: [(&str, &DVector<f64>); 4] =
            [("g", &self.g), ("b", &self.b), ("lower", &self.lower), ("upper", &self.upper)];
        for (name, v) in vectors {
            write_block(&mut w, name, v.len(), 1, |i, _| v[i])?;
        }
        Ok(())
    }
}

fn write_block<W: Write>(
    w: &mut W,
    name: &str,
    rows: usize,
    cols: usize,
    at: impl Fn(usize, usize) -> f64,
) -> io::Result<()> {
    writeln!(w, "{name} {rows} {cols}")?;
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| format!("{:.17e}", at(i, j))).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::MaxIterations => "max_iterations",
            QpStatus::Infeasible => "infeasible",
        }
    }
}

/// KKT residual norms (all infinity norms).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `|H x + g + A^T y + C^T z|` relative to the largest of its terms
    /// (floored at one).
    pub stationarity: f64,
    pub primal_equality: f64,
    pub primal_inequality: f64,
    /// Largest `min(|z_i|, slack of the bound selected by sign(z_i))`.
    pub complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal_equality).max(self.primal_inequality).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub y_eq: DVector<f64>,
    pub z_ineq: DVector<f64>,
    pub status: QpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Evaluates the four KKT residuals of a candidate primal-dual point.
pub fn kkt_residuals(p: &QpProblem, x: &DVector<f64>, y_eq: &DVector<f64>, z_ineq: &DVector<f64>) -> Residuals {
    let hx = &p.h * x;
    let aty = p.a.transpose() * y_eq;
    let ctz = p.c.transpose() * z_ineq;
    let grad = &hx + &p.g + &aty + &ctz;
    let scale = 1f64.max(inf_norm(&hx)).max(inf_norm(&p.g)).max(inf_norm(&aty)).max(inf_norm(&ctz));
    let stationarity = inf_norm(&grad) / scale;
    let primal_equality = if p.n_eq() == 0 { 0.0 } else { inf_norm(&(&p.a * x - &p.b)) };
    let cx = &p.c * x;
    let mut primal_inequality: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for i in 0..p.n_ineq() {
        let (lo, hi) = (p.lower[i], p.upper[i]);
        let below = if lo > -INFINITY { lo - cx[i] } else { 0.0 };
        let above = if hi < INFINITY { cx[i] - hi } else { 0.0 };
        primal_inequality = primal_inequality.max(below).max(above);
        let zi = z_ineq[i];
        let gap = if zi > 0.0 {
            if hi < INFINITY { (hi - cx[i]).abs() } else { f64::INFINITY }
        } else if zi < 0.0 {
            if lo > -INFINITY { (cx[i] - lo).abs() } else { f64::INFINITY }
        } else {
            0.0
        };
        complementarity = complementarity.max(zi.abs().min(gap));
    }
    Residuals {
        stationarity,
        primal_equality,
        primal_inequality,
        complementarity,
    }
}

/// Cold-start solve with default settings apart from `tol` and `max_iter`.
pub fn solve(p: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    let settings = QpSettings {
        tol,
        max_iter,
        ..QpSettings::default()
    };
    QpSolver::new(settings).solve(p)
}
