//! Scenario registry, runner and template-relative rendering metrics.

mod metrics;
mod presets;
mod run;
mod scenario;

use thiserror::Error;

use crate::sim::SimError;
use crate::template::TemplateError;
use crate::wbc::WbcError;

pub use metrics::{compare_to_template, MetricsError, RenderingMetrics, TrackSample};
pub use presets::{ImpedancePresets, MassLevel};
pub use run::{
    emit_summary, load_model, log_metrics, run_all, run_scenario, ScenarioResult, SUMMARY_HEADER,
    VIOLATION_TOLERANCE,
};
pub use scenario::{
    ChirpScenario, ExperimentConfig, Scenario, ScenarioKind, Selection, StepScenario, TrotScenario,
    TROT_ANGULAR_WEIGHT,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown scenario `{0}` (expected stand-step-base-inertia, stand-step-arm-inertia, stand-chirp or trot)")]
    UnknownScenario(String),
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load model: {0}")]
    Model(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Controller(#[from] WbcError),
    #[error("scenario {scenario}: {source}")]
    Sim { scenario: String, source: SimError },
    #[error("scenario {scenario}: controller QP unsolved for {ticks} consecutive ticks from t = {t:.4} s")]
    PersistentQpFailure { scenario: String, t: f64, ticks: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o failure: {0}")]
    Io(String),
}
