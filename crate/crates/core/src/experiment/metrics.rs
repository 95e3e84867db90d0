use thiserror::Error;

use crate::template::Vec3;

/// Base and end-effector positions at one instant, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub t: f64,
    pub xb: Vec3,
    pub xe: Vec3,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("logs differ in length ({sim} vs {reference} samples)")]
    LengthMismatch { sim: usize, reference: usize },
    #[error("logs are not time-aligned at sample {index} ({sim} vs {reference} s)")]
    Misaligned { index: usize, sim: f64, reference: f64 },
    #[error("no samples at or after the metrics window start {0} s")]
    EmptyWindow(f64),
}

/// How faithfully a run rendered its template. Tracking errors are taken
/// over `t >= window_start`; displacements are relative to the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderingMetrics {
    pub window_start: f64,
    /// RMS of the Euclidean sim-vs-template error.
    pub rms_base: f64,
    pub rms_ee: f64,
    /// Per-axis RMS errors.
    pub rms_base_axis: Vec3,
    pub rms_ee_axis: Vec3,
    /// Mean displacement over the final 10% of the samples.
    pub steady_base: Vec3,
    pub steady_ee: Vec3,
    pub steady_ref_base: Vec3,
    pub steady_ref_ee: Vec3,
    /// Largest template displacement norm inside the window.
    pub ref_peak_base: f64,
    pub ref_peak_ee: f64,
    /// Per-axis RMS of the template displacement inside the window.
    pub ref_rms_base_axis: Vec3,
    pub ref_rms_ee_axis: Vec3,
    /// Largest force-row gap between desired and realized base wrench (N).
    pub peak_wrench_error: f64,
    /// Ticks with a hard-constraint violation above tolerance.
    pub violations: usize,
    /// Ticks whose QP did not reach the residual tolerance.
    pub non_optimal: usize,
    pub median_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

struct Accumulator {
    sum: Vec3,
    n: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self { sum: Vec3::zeros(), n: 0 }
    }

    fn push_squares(&mut self, v: &Vec3) {
        self.sum += v.component_mul(v);
        self.n += 1;
    }

    fn rms_axis(&self) -> Vec3 {
        (self.sum / self.n as f64).map(f64::sqrt)
    }

    fn rms_norm(&self) -> f64 {
        (self.sum.sum() / self.n as f64).sqrt()
    }
}

fn mean(v: impl Iterator<Item = Vec3>) -> Vec3 {
    let (s, n) = v.fold((Vec3::zeros(), 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

/// Tracking part of the metrics; the QP fields are left at zero.
pub fn compare_to_template(
    sim: &[TrackSample],
    reference: &[TrackSample],
    window_start: f64,
) -> Result<RenderingMetrics, MetricsError> {
    if sim.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            sim: sim.len(),
            reference: reference.len(),
        });
    }
    for (index, (a, b)) in sim.iter().zip(reference).enumerate() {
        if (a.t - b.t).abs() > 1e-9 * (1.0 + a.t.abs()) {
            return Err(MetricsError::Misaligned {
                index,
                sim: a.t,
                reference: b.t,
            });
        }
    }
    let first = sim.iter().position(|s| s.t >= window_start).ok_or(MetricsError::EmptyWindow(window_start))?;
    let (s0, r0) = (sim[0], reference[0]);

    let (mut eb, mut ee) = (Accumulator::new(), Accumulator::new());
    let (mut ab, mut ae) = (Accumulator::new(), Accumulator::new());
    let (mut peak_b, mut peak_e) = (0f64, 0f64);
    for (s, r) in sim[first..].iter().zip(&reference[first..]) {
        eb.push_squares(&(s.xb - r.xb));
        ee.push_squares(&(s.xe - r.xe));
        let (db, de) = (r.xb - r0.xb, r.xe - r0.xe);
        ab.push_squares(&db);
        ae.push_squares(&de);
        peak_b = peak_b.max(db.norm());
        peak_e = peak_e.max(de.norm());
    }

    let n = sim.len();
    let tail = n - (n / 10).max(1);
    Ok(RenderingMetrics {
        window_start,
        rms_base: eb.rms_norm(),
        rms_ee: ee.rms_norm(),
        rms_base_axis: eb.rms_axis(),
        rms_ee_axis: ee.rms_axis(),
        steady_base: mean(sim[tail..].iter().map(|s| s.xb - s0.xb)),
        steady_ee: mean(sim[tail..].iter().map(|s| s.xe - s0.xe)),
        steady_ref_base: mean(reference[tail..].iter().map(|r| r.xb - r0.xb)),
        steady_ref_ee: mean(reference[tail..].iter().map(|r| r.xe - r0.xe)),
        ref_peak_base: peak_b,
        ref_peak_ee: peak_e,
        ref_rms_base_axis: ab.rms_axis(),
        ref_rms_ee_axis: ae.rms_axis(),
        ..RenderingMetrics::default()
    })
}
