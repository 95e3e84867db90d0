//! QP-based whole-body Cartesian impedance controller.
//!
//! Each tick the controller computes the desired base wrench and arm joint
//! accelerations of the double-mass reference, assembles one QP over
//! generalized accelerations, ground forces and swing slacks, solves it and
//! maps the optimum to joint torques through the actuated rows of the
//! equations of motion.

mod assemble;
mod tasks;

use std::io::Write;

use nalgebra::{DVector, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::StateError;
use crate::qp::{QpError, QpSettings, QpSolver, QpStatus, Residuals};
use crate::template::{ImpedanceSettings, Vec3};

pub use assemble::{
    assemble_qp, constraint_violations, map_torques, min_margin, AssembledQp, ConstraintViolations, ControlFrames,
    QpLayout, WbcInput,
};
pub use tasks::{
    acceleration_bounds, damped_pinv, desired_arm_accel, desired_base_wrench, manipulability, orientation_error,
    pinv_damping, ArmTask, Desireds, TaskState,
};

#[derive(Debug, Error, PartialEq)]
pub enum WbcError {
    #[error("model has no frame `{0}`")]
    MissingFrame(String),
    #[error("contact set is empty")]
    NoContact,
    #[error("invalid state: {0}")]
    State(StateError),
    #[error("qp: {0}")]
    Qp(QpError),
    #[error("invalid controller configuration: {0}")]
    Config(String),
}

/// Controller weights, limits and gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WbcConfig {
    /// Diagonal of the base wrench tracking weight (force rows then torque rows).
    pub base_weight: [f64; 6],
    pub arm_weight: f64,
    pub accel_regularization: f64,
    pub force_regularization: f64,
    pub slack_weight: f64,
    /// Linear cost on the (non-negative) swing slacks. Makes the penalty
    /// exact, so slacks are zero whenever the swing rows can be met.
    pub slack_linear_weight: f64,
    pub friction_coefficient: f64,
    pub min_normal_force: f64,
    pub max_normal_force: f64,
    /// Time to come to rest at a joint limit (s).
    pub limit_horizon: f64,
    pub manipulability_threshold: f64,
    pub max_damping: f64,
    pub posture_kp: f64,
    pub posture_kd: f64,
    pub qp_tolerance: f64,
    pub qp_max_iterations: usize,
}

impl Default for WbcConfig {
    fn default() -> Self {
        Self {
            base_weight: [1e4; 6],
            arm_weight: 1e2,
            accel_regularization: 1e-3,
            force_regularization: 1e-6,
            slack_weight: 1e6,
            slack_linear_weight: 1e3,
            friction_coefficient: 0.7,
            min_normal_force: 5.0,
            max_normal_force: 1000.0,
            limit_horizon: 0.1,
            manipulability_threshold: 5e-3,
            max_damping: 0.1,
            posture_kp: 50.0,
            posture_kd: 10.0,
            qp_tolerance: 1e-6,
            qp_max_iterations: 4000,
        }
    }
}

impl WbcConfig {
    pub fn validate(&self) -> Result<(), WbcError> {
        let bad = |m: &str| Err(WbcError::Config(m.to_string()));
        let weights = self.base_weight.iter().chain([&self.arm_weight, &self.slack_weight, &self.slack_linear_weight]);
        if weights.into_iter().any(|w| !(*w >= 0.0)) {
            return bad("weights must be non-negative");
        }
        if !(self.accel_regularization > 0.0 && self.force_regularization > 0.0) {
            return bad("regularization must be positive");
        }
        if !(self.friction_coefficient > 0.0) {
            return bad("friction coefficient must be positive");
        }
        if !(self.min_normal_force >= 0.0 && self.min_normal_force < self.max_normal_force) {
            return bad("normal force bounds must satisfy 0 <= min < max");
        }
        if !(self.limit_horizon > 0.0) {
            return bad("limit horizon must be positive");
        }
        if !(self.manipulability_threshold > 0.0 && self.max_damping >= 0.0) {
            return bad("pseudo-inverse damping parameters must be positive");
        }
        if !(self.qp_tolerance > 0.0 && self.qp_max_iterations > 0) {
            return bad("qp tolerance and iteration cap must be positive");
        }
        Ok(())
    }
}

/// Per-tick diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WbcDiagnostics {
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub violations: ConstraintViolations,
    /// Smallest distance to a hard inequality bound (negative when violated).
    pub min_margin: f64,
    pub desired_wrench: Vector6<f64>,
    /// Wrench rows of the cost evaluated at the optimum.
    pub realized_wrench: Vector6<f64>,
    pub arm_accel_desired: DVector<f64>,
    pub cost_base: f64,
    pub cost_arm: f64,
    pub cost_regularization: f64,
    pub cost_slack: f64,
    /// True when the previous torques were reused because the QP failed.
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WbcOutput {
    /// Leg then arm joint torques.
    pub tau: DVector<f64>,
    pub udot: DVector<f64>,
    /// Ground forces per leg in `Leg::ALL` order; zero for swing legs.
    pub forces: [Vec3; 4],
    pub slacks: DVector<f64>,
    pub diagnostics: WbcDiagnostics,
}

impl WbcOutput {
    pub fn tau_legs(&self, n_leg: usize) -> DVector<f64> {
        self.tau.rows(0, n_leg).into_owned()
    }

    pub fn tau_arm(&self, n_leg: usize) -> DVector<f64> {
        self.tau.rows(n_leg, self.tau.len() - n_leg).into_owned()
    }
}

/// Stateful controller: owns the warm-started solver and the last torques.
#[derive(Debug, Clone)]
pub struct WbcController {
    pub config: WbcConfig,
    pub settings: ImpedanceSettings,
    frames: ControlFrames,
    solver: QpSolver,
    last_tau: Option<DVector<f64>>,
    last_shape: Option<[bool; 4]>,
}

impl WbcController {
    pub fn new(
        model: &crate::dynamics::RobotModel,
        settings: ImpedanceSettings,
        config: WbcConfig,
    ) -> Result<Self, WbcError> {
        config.validate()?;
        settings.validate().map_err(|e| WbcError::Config(e.to_string()))?;
        let solver = QpSolver::new(QpSettings {
            tol: config.qp_tolerance,
            max_iter: config.qp_max_iterations,
            ..QpSettings::default()
        });
        Ok(Self {
            config,
            settings,
            frames: ControlFrames::new(model)?,
            solver,
            last_tau: None,
            last_shape: None,
        })
    }

    pub fn frames(&self) -> &ControlFrames {
        &self.frames
    }

    /// One control tick. QP failure does not raise: the previous torques are
    /// held (zero before the first success) and the output is flagged.
    pub fn control_step(&mut self, input: &WbcInput) -> Result<WbcOutput, WbcError> {
        let asm = assemble_qp(input, &self.frames, &self.settings, &self.config)?;
        if self.last_shape != Some(input.stance) {
            // the decision vector changes meaning with the contact set
            self.solver.reset();
            self.last_shape = Some(input.stance);
        }
        let sol = self.solver.solve(&asm.problem).map_err(WbcError::Qp)?;
        let layout = &asm.layout;
        let x = &sol.x;
        let udot = x.rows(0, layout.dof).into_owned();
        let fg = x.rows(layout.forces.start, layout.forces.len()).into_owned();
        let slacks = x.rows(layout.slacks.start, layout.slacks.len()).into_owned();
        let mut forces = [Vec3::zeros(); 4];
        for (k, &leg) in layout.stance_legs.iter().enumerate() {
            forces[leg] = Vec3::new(fg[3 * k], fg[3 * k + 1], fg[3 * k + 2]);
        }
        let violations = constraint_violations(&asm.problem, layout, x);
        let margin = min_margin(&asm.problem, layout, x);
        let realized = &asm.wrench_map * x;
        let realized_wrench = Vector6::from_column_slice(realized.as_slice());
        let nl = input.model.n_leg();
        let na = input.model.n_arm();
        let werr = realized_wrench - asm.desired_wrench;
        let cost_base: f64 =
            0.5 * werr.iter().zip(self.config.base_weight.iter()).map(|(e, w)| w * e * e).sum::<f64>();
        let aerr = udot.rows(6 + nl, na) - &asm.arm.qdd_desired;
        let cost_arm = 0.5 * self.config.arm_weight * aerr.norm_squared();
        let cost_regularization = 0.5
            * (self.config.accel_regularization * udot.norm_squared()
                + self.config.force_regularization * fg.norm_squared());
        let cost_slack =
            0.5 * self.config.slack_weight * slacks.norm_squared() + self.config.slack_linear_weight * slacks.sum();

        let optimal = sol.status == QpStatus::Optimal;
        let tau = if optimal {
            let t = map_torques(&udot, &fg, &input.fe, &asm.dynamics);
            self.last_tau = Some(t.clone());
            t
        } else {
            self.last_tau.clone().unwrap_or_else(|| DVector::zeros(input.model.n_joints()))
        };
        Ok(WbcOutput {
            tau,
            udot,
            forces,
            slacks,
            diagnostics: WbcDiagnostics {
                status: sol.status,
                iterations: sol.iterations,
                residuals: sol.residuals,
                violations,
                min_margin: margin,
                desired_wrench: asm.desired_wrench,
                realized_wrench,
                arm_accel_desired: asm.arm.qdd_desired.clone(),
                cost_base,
                cost_arm,
                cost_regularization,
                cost_slack,
                held: !optimal,
            },
        })
    }
}

pub const DIAGNOSTICS_HEADER: [&str; 25] = [
    "t",
    "status",
    "iterations",
    "stationarity",
    "primal_eq",
    "primal_ineq",
    "complementarity",
    "cost_base",
    "cost_arm",
    "cost_reg",
    "cost_slack",
    "max_violation",
    "min_margin",
    "wd_fx",
    "wd_fy",
    "wd_fz",
    "wd_tx",
    "wd_ty",
    "wd_tz",
    "mbqdd_fx",
    "mbqdd_fy",
    "mbqdd_fz",
    "mbqdd_tx",
    "mbqdd_ty",
    "mbqdd_tz",
];

/// Appends one diagnostics record per tick (`DIAGNOSTICS_HEADER` columns).
pub fn write_diagnostics_csv<W: Write>(out: W, records: &[(f64, WbcDiagnostics)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for (t, d) in records {
        let mut row = vec![
            format!("{t:.6}"),
            d.status.as_str().to_string(),
            d.iterations.to_string(),
        ];
        let r = &d.residuals;
        for v in [
            r.stationarity,
            r.primal_equality,
            r.primal_inequality,
            r.complementarity,
            d.cost_base,
            d.cost_arm,
            d.cost_regularization,
            d.cost_slack,
            d.violations.max_hard(),
            d.min_margin,
        ] {
            row.push(format!("{v:.6e}"));
        }
        row.extend(d.desired_wrench.iter().map(|v| format!("{v:.6e}")));
        row.extend(d.realized_wrench.iter().map(|v| format!("{v:.6e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
