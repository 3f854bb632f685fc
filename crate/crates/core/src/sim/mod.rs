//! Deterministic discrete-event simulation of the fleet, plus workloads,
//! synthetic guidepaths, metrics and experiment drivers.

pub mod audit;
mod config;
mod engine;
mod events;
mod experiment;
mod metrics;
mod synthetic;
mod workload;

use thiserror::Error;

use crate::guidepath::{GuidepathError, NodeId};
use crate::predictor::PredictorError;

pub use config::{
    GuidepathSource, PredictorKind, ScenarioConfig, SchedulerKind, SweepSpec, WorkloadSpec,
};
pub use engine::{
    simulate, InjectedDelay, LogRow, NodeVisit, RunOptions, RunOutcome, RunResult, Scenario,
    TaskRecord, Traversal,
};
pub use events::{Event, EventKind, EventQueue};
pub use experiment::{run, Experiment, PairOutcome};
pub use metrics::{
    avg_completion_time, event_log_csv, improvement, metrics_csv, MetricsError, MetricsRecord,
    MetricsRow, METRICS_HEADER,
};
pub use synthetic::{make_synthetic_guidepath, SyntheticKind};
pub use workload::{
    generate_tasks, read_task_csv, write_task_csv, MarkovTaskGenerator, TaskSpec, TransitionMatrix,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Guidepath(#[from] GuidepathError),
    #[error("node {to} is unreachable from {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("no events left at t={time} but tasks remain open")]
    Stalled { time: f64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
