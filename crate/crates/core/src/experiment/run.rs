use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::metrics::{compare_to_template, RenderingMetrics, TrackSample};
use super::scenario::{ExperimentConfig, Scenario};
use super::ExperimentError;
use crate::dynamics::RobotModel;
use crate::qp::QpStatus;
use crate::sim::{simulate, standing_state, write_sim_csv, SimConfig, SimLog};
use crate::wbc::WbcController;

/// Hard-constraint violation counted against a tick.
pub const VIOLATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub metrics: RenderingMetrics,
    pub log: SimLog,
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<RobotModel, ExperimentError> {
    match &cfg.model {
        Some(path) => RobotModel::from_file(path).map_err(|e| ExperimentError::Model(e.to_string())),
        None => Ok(RobotModel::hyq_arm()),
    }
}

/// Longest run of held ticks and the time it started.
fn longest_hold(log: &SimLog) -> (usize, f64) {
    let (mut best, mut best_t, mut run, mut run_t) = (0, 0.0, 0, 0.0);
    for r in &log.records {
        if r.diagnostics.as_ref().is_some_and(|d| d.held) {
            if run == 0 {
                run_t = r.t;
            }
            run += 1;
            if run > best {
                best = run;
                best_t = run_t;
            }
        } else {
            run = 0;
        }
    }
    (best, best_t)
}

/// Tracking metrics against the co-simulated template plus the controller
/// statistics of every tick.
pub fn log_metrics(log: &SimLog, window_start: f64) -> Result<RenderingMetrics, ExperimentError> {
    let sim: Vec<TrackSample> = log
        .records
        .iter()
        .map(|r| TrackSample {
            t: r.t,
            xb: r.state.base_position,
            xe: r.ee,
        })
        .collect();
    let reference: Vec<TrackSample> = log
        .records
        .iter()
        .map(|r| TrackSample {
            t: r.t,
            xb: r.template.xb,
            xe: r.template.xe,
        })
        .collect();
    let mut m = compare_to_template(&sim, &reference, window_start)?;
    let mut iterations = Vec::with_capacity(log.records.len());
    for r in &log.records {
        let Some(d) = &r.diagnostics else { continue };
        iterations.push(d.iterations);
        if d.violations.max_hard() > VIOLATION_TOLERANCE {
            m.violations += 1;
        }
        if d.status != QpStatus::Optimal {
            m.non_optimal += 1;
        }
        m.max_residual = m.max_residual.max(d.residuals.max());
        if r.t >= window_start {
            let gap = (d.desired_wrench.fixed_rows::<3>(0) - d.realized_wrench.fixed_rows::<3>(0)).norm();
            m.peak_wrench_error = m.peak_wrench_error.max(gap);
        }
    }
    iterations.sort_unstable();
    m.median_iterations = iterations.get(iterations.len() / 2).copied().unwrap_or(0);
    m.max_iterations = iterations.last().copied().unwrap_or(0);
    Ok(m)
}

/// Simulates one scenario and, with `out`, writes `<out>/<name>.csv`.
pub fn run_scenario(
    model: &RobotModel,
    cfg: &ExperimentConfig,
    s: &Scenario,
    out: Option<&Path>,
) -> Result<ScenarioResult, ExperimentError> {
    let settings = cfg.presets.settings(s.base_mass, s.arm_mass)?;
    let mut controller = WbcController::new(model, settings, s.controller.clone())?;
    let sim_cfg = SimConfig {
        duration: s.duration,
        ..cfg.sim
    };
    let initial = standing_state(model, &sim_cfg.contact).map_err(|source| ExperimentError::Sim {
        scenario: s.name.clone(),
        source,
    })?;
    let log = simulate(model, Some(&mut controller), &s.locomotion, &s.profile, &initial, &sim_cfg).map_err(
        |source| ExperimentError::Sim {
            scenario: s.name.clone(),
            source,
        },
    )?;
    let (held, t) = longest_hold(&log);
    if held > cfg.max_held_ticks {
        return Err(ExperimentError::PersistentQpFailure {
            scenario: s.name.clone(),
            t,
            ticks: held,
        });
    }
    let metrics = log_metrics(&log, s.window_start)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.csv", s.name));
        let file = File::create(&path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        write_sim_csv(BufWriter::new(file), &log).map_err(|e| ExperimentError::Io(e.to_string()))?;
    }
    Ok(ScenarioResult {
        scenario: s.clone(),
        metrics,
        log,
    })
}

/// Runs independent scenarios in parallel; results keep the input order and
/// the first failure (in that order) is reported.
pub fn run_all(
    cfg: &ExperimentConfig,
    scenarios: &[Scenario],
    out: Option<&Path>,
) -> Result<Vec<ScenarioResult>, ExperimentError> {
    let model = load_model(cfg)?;
    let results: Vec<_> = scenarios.par_iter().map(|s| run_scenario(&model, cfg, s, out)).collect();
    results.into_iter().collect()
}

pub const SUMMARY_HEADER: [&str; 24] = [
    "scenario",
    "kind",
    "base_mass",
    "arm_mass",
    "gp",
    "rms_base",
    "rms_ee",
    "rms_base_x",
    "rms_base_y",
    "rms_ee_x",
    "rms_ee_y",
    "steady_base_x",
    "steady_ee_x",
    "steady_ref_base_x",
    "steady_ref_ee_x",
    "ref_peak_base",
    "ref_peak_ee",
    "ref_rms_ee_x",
    "peak_wrench_error",
    "violations",
    "non_optimal",
    "median_iterations",
    "max_iterations",
    "max_residual",
];

/// One row per result in the given order.
pub fn emit_summary<W: Write>(out: W, results: &[ScenarioResult]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| ExperimentError::Io(e.to_string());
    w.write_record(SUMMARY_HEADER).map_err(io)?;
    let f = |v: f64| format!("{v:.6e}");
    for r in results {
        let (s, m) = (&r.scenario, &r.metrics);
        let row = [
            s.name.clone(),
            s.kind.to_string(),
            s.base_mass.to_string(),
            s.arm_mass.to_string(),
            s.gp.map_or_else(String::new, |g| g.to_string()),
            f(m.rms_base),
            f(m.rms_ee),
            f(m.rms_base_axis.x),
            f(m.rms_base_axis.y),
            f(m.rms_ee_axis.x),
            f(m.rms_ee_axis.y),
            f(m.steady_base.x),
            f(m.steady_ee.x),
            f(m.steady_ref_base.x),
            f(m.steady_ref_ee.x),
            f(m.ref_peak_base),
            f(m.ref_peak_ee),
            f(m.ref_rms_ee_axis.x),
            f(m.peak_wrench_error),
            m.violations.to_string(),
            m.non_optimal.to_string(),
            m.median_iterations.to_string(),
            m.max_iterations.to_string(),
            f(m.max_residual),
        ];
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| ExperimentError::Io(e.to_string()))?;
    Ok(())
}
