//! Deciding when to pre-position an idle vehicle, and reconciling the
//! outstanding prediction with the next operator task.

mod manager;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::FleetState;

pub use manager::{
    decision_log_csv, Decision, DecisionAction, Effects, OutstandingPrediction, PredictionManager,
};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("thresholds must be increasing, got {0:?}")]
    Thresholds([f64; 3]),
    #[error("required idle counts must be nondecreasing, got {0:?}")]
    RequiredIdle([usize; 4]),
    #[error("window length must be positive")]
    Window,
    #[error("monitor period must be positive, got {0}")]
    MonitorPeriod(f64),
}

/// Running totals behind the idle measure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdleMeasureInputs {
    /// seconds since the start of the run
    pub elapsed: f64,
    /// operator tasks created so far
    pub created: usize,
    /// operator tasks completed so far
    pub completed: usize,
    /// sum of their creation-to-completion durations
    pub total_duration: f64,
}

impl IdleMeasureInputs {
    pub fn from_durations(elapsed: f64, created: usize, durations: &[f64]) -> Self {
        IdleMeasureInputs {
            elapsed,
            created,
            completed: durations.len(),
            total_duration: durations.iter().sum(),
        }
    }
}

/// Mean completion duration divided by mean inter-creation time
/// (`elapsed / created`). Zero until at least one task has completed.
pub fn idle_measure(inputs: &IdleMeasureInputs) -> f64 {
    if inputs.completed == 0 || inputs.created == 0 || inputs.elapsed <= 0.0 {
        return 0.0;
    }
    let mean_completion = inputs.total_duration / inputs.completed as f64;
    let mean_gap = inputs.elapsed / inputs.created as f64;
    mean_completion / mean_gap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionPolicy {
    /// breakpoints between the four regimes
    pub thresholds: [f64; 3],
    /// idle vehicles required in each regime
    pub required_idle: [usize; 4],
    /// window length R
    pub window: usize,
    /// seconds between monitor checks
    pub monitor_period: f64,
}

impl Default for PredictionPolicy {
    fn default() -> Self {
        PredictionPolicy {
            thresholds: [0.8, 1.2, 1.6],
            required_idle: [1, 2, 3, 4],
            window: 5,
            monitor_period: 10.0,
        }
    }
}

impl PredictionPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let [a, b, c] = self.thresholds;
        if !(a < b && b < c) {
            return Err(PolicyError::Thresholds(self.thresholds));
        }
        if self.required_idle.windows(2).any(|p| p[0] > p[1]) {
            return Err(PolicyError::RequiredIdle(self.required_idle));
        }
        if self.window == 0 {
            return Err(PolicyError::Window);
        }
        if self.monitor_period.is_nan() || self.monitor_period <= 0.0 {
            return Err(PolicyError::MonitorPeriod(self.monitor_period));
        }
        Ok(())
    }

    /// Idle vehicles required at this idle measure. The last regime is
    /// closed on the left, so `idle == thresholds[2]` falls into it.
    pub fn required_at(&self, idle: f64) -> usize {
        let regime = self.thresholds.iter().filter(|&&t| idle >= t).count();
        self.required_idle[regime]
    }
}

pub fn should_create_predicted(idle: f64, n_idle: usize, policy: &PredictionPolicy) -> bool {
    n_idle >= policy.required_at(idle)
}

pub fn count_idle_vehicles(state: &FleetState) -> usize {
    state.count_idle()
}
