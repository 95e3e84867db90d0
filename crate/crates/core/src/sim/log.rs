use std::io::Write;

use nalgebra::DVector;

use crate::dynamics::GeneralizedState;
use crate::template::{TemplateSample, Vec3};
use crate::wbc::WbcDiagnostics;

/// One control tick, sampled before the tick's torques are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub state: GeneralizedState,
    /// End-effector position, world frame.
    pub ee: Vec3,
    /// Applied (and measured) end-effector force.
    pub fe: Vec3,
    /// Foot positions in `Leg::ALL` order.
    pub feet: [Vec3; 4],
    /// Plant ground forces at this state.
    pub grf: [Vec3; 4],
    /// Controller contact schedule.
    pub stance: [bool; 4],
    pub tau: DVector<f64>,
    /// Reference system driven by the same force history.
    pub template: TemplateSample,
    /// `None` when the simulation ran unactuated.
    pub diagnostics: Option<WbcDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub records: Vec<SimRecord>,
}

impl SimLog {
    pub fn template(&self) -> Vec<TemplateSample> {
        self.records.iter().map(|r| r.template).collect()
    }
}

/// Fixed columns; the joint torques `tau_0 ..` follow.
pub const SIM_HEADER: [&str; 48] = [
    "t", "xb_x", "xb_y", "xb_z", "qb_w", "qb_x", "qb_y", "qb_z", "vb_x", "vb_y", "vb_z", "wb_x", "wb_y", "wb_z",
    "xe_x", "xe_y", "xe_z", "fe_x", "fe_y", "fe_z", "ref_xb_x", "ref_xb_y", "ref_xb_z", "ref_xe_x", "ref_xe_y",
    "ref_xe_z", "stance_lf", "stance_rf", "stance_lh", "stance_rh", "grf_lf_x", "grf_lf_y", "grf_lf_z", "grf_rf_x",
    "grf_rf_y", "grf_rf_z", "grf_lh_x", "grf_lh_y", "grf_lh_z", "grf_rh_x", "grf_rh_y", "grf_rh_z", "qp_status",
    "qp_iterations", "qp_residual", "max_violation", "cost_slack", "held",
];

pub fn write_sim_csv<W: Write>(out: W, log: &SimLog) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n_tau = log.records.first().map_or(0, |r| r.tau.len());
    let mut header: Vec<String> = SIM_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend((0..n_tau).map(|j| format!("tau_{j}")));
    w.write_record(&header)?;
    let f = |v: f64| format!("{v:.9e}");
    for r in &log.records {
        let s = &r.state;
        let q = s.base_orientation.quaternion();
        let mut row = vec![format!("{:.6}", r.t)];
        row.extend(s.base_position.iter().map(|v| f(*v)));
        row.extend([q.w, q.i, q.j, q.k].map(f));
        row.extend(s.base_linear_velocity.iter().map(|v| f(*v)));
        row.extend(s.base_angular_velocity.iter().map(|v| f(*v)));
        row.extend(r.ee.iter().map(|v| f(*v)));
        row.extend(r.fe.iter().map(|v| f(*v)));
        row.extend(r.template.xb.iter().map(|v| f(*v)));
        row.extend(r.template.xe.iter().map(|v| f(*v)));
        row.extend(r.stance.map(|b| u8::from(b).to_string()));
        for g in &r.grf {
            row.extend(g.iter().map(|v| f(*v)));
        }
        match &r.diagnostics {
            Some(d) => {
                row.push(d.status.as_str().to_string());
                row.push(d.iterations.to_string());
                row.push(f(d.residuals.max()));
                row.push(f(d.violations.max_hard()));
                row.push(f(d.cost_slack));
                row.push(u8::from(d.held).to_string());
            }
            None => row.extend(["none", "0", "0", "0", "0", "0"].map(String::from)),
        }
        row.extend(r.tau.iter().map(|v| f(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
