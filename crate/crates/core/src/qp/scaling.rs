use nalgebra::{DMatrix, DVector};

/// Ruiz equilibration of the KKT matrix `[H K^T; K 0]` plus a cost scale.
///
/// Scaled data: `H' = c D H D`, `g' = c D g`, `K' = E K D`, bounds `E l`,
/// `E u`. Unscaling: `x = D x'`, `y = E y' / c`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub d: DVector<f64>,
    pub e: DVector<f64>,
    pub c: f64,
}

const MIN_NORM: f64 = 1e-4;
const MAX_NORM: f64 = 1e4;

fn clamp_norm(v: f64) -> f64 {
    if v < MIN_NORM {
        1.0
    } else {
        v.min(MAX_NORM)
    }
}

fn col_inf_norms(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.amax()))
}

impl Scaling {
    /// Scales `h`, `g` and `k` in place.
    pub fn equilibrate(h: &mut DMatrix<f64>, g: &mut DVector<f64>, k: &mut DMatrix<f64>, iterations: usize) -> Self {
        let n = h.nrows();
        let m = k.nrows();
        let mut d = DVector::from_element(n, 1.0);
        let mut e = DVector::from_element(m, 1.0);
        for _ in 0..iterations {
            let hn = col_inf_norms(h);
            let kn = if m > 0 { col_inf_norms(k) } else { DVector::zeros(n) };
            let dd = DVector::from_fn(n, |j, _| 1.0 / clamp_norm(hn[j].max(kn[j])).sqrt());
            let ed = DVector::from_fn(m, |i, _| 1.0 / clamp_norm(k.row(i).amax()).sqrt());
            for j in 0..n {
                for i in 0..n {
                    h[(i, j)] *= dd[i] * dd[j];
                }
                for i in 0..m {
                    k[(i, j)] *= ed[i] * dd[j];
                }
            }
            g.component_mul_assign(&dd);
            d.component_mul_assign(&dd);
            e.component_mul_assign(&ed);
        }
        let mean_h = if n > 0 { col_inf_norms(h).mean() } else { 1.0 };
        let c = 1.0 / clamp_norm(mean_h.max(g.amax()));
        *h *= c;
        *g *= c;
        Self { d, e, c }
    }
}
