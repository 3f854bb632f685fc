use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::{make_synthetic_guidepath, SyntheticKind};
use super::workload::TransitionMatrix;
use super::SimError;
use crate::guidepath::{load_guidepath, GuidepathGraph, NodeId};
use crate::prediction::PredictionPolicy;
use crate::predictor::Hyperparameters;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Dpstw,
    Greedy,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Dpstw => "dpstw",
            SchedulerKind::Greedy => "greedy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Lstm,
    Markov,
    Oracle,
    None,
}

impl PredictorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictorKind::Lstm => "lstm",
            PredictorKind::Markov => "markov",
            PredictorKind::Oracle => "oracle",
            PredictorKind::None => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GuidepathSource {
    Grid {
        width: usize,
        height: usize,
    },
    Ring {
        nodes: usize,
    },
    /// guidepath JSON document, relative to the config file
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    /// probability of the dominant transition `j -> j + 1`
    pub dominant: f64,
    /// explicit `p(i, j)` rows over the station list; overrides `dominant`
    pub matrix: Option<Vec<Vec<f64>>>,
    /// station index of the first task start
    pub initial: Option<usize>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            dominant: 0.9,
            matrix: None,
            initial: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub busyness: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// One file describes a whole scenario; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub guidepath: GuidepathSource,
    /// station node ids; defaults to the guidepath's stations
    pub stations: Option<Vec<usize>>,
    pub vehicles: usize,
    pub scheduler: SchedulerKind,
    pub prediction: bool,
    pub predictor: PredictorKind,
    /// operator tasks per hour
    pub busyness: f64,
    pub tasks: usize,
    pub seed: u64,
    pub workload: WorkloadSpec,
    pub policy: PredictionPolicy,
    pub routing_k: usize,
    /// seconds a node stays reserved around every arrival and departure
    pub node_clearance: f64,
    pub train_fraction: f64,
    pub lstm: Hyperparameters,
    pub checkpoint: Option<PathBuf>,
    pub sweep: SweepSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            guidepath: GuidepathSource::Grid {
                width: 5,
                height: 5,
            },
            stations: None,
            vehicles: 8,
            scheduler: SchedulerKind::Dpstw,
            prediction: false,
            predictor: PredictorKind::Lstm,
            busyness: 1000.0,
            tasks: 1000,
            seed: 0,
            workload: WorkloadSpec::default(),
            policy: PredictionPolicy::default(),
            routing_k: 3,
            node_clearance: 0.1,
            train_fraction: 0.8,
            lstm: Hyperparameters::default(),
            checkpoint: None,
            sweep: SweepSpec::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not need the guidepath.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.vehicles == 0 {
            return fail("vehicles must be at least 1".into());
        }
        if !(self.busyness > 0.0 && self.busyness.is_finite()) {
            return fail(format!("busyness must be positive, got {}", self.busyness));
        }
        if self.routing_k == 0 {
            return fail("routing_k must be at least 1".into());
        }
        if !(self.node_clearance > 0.0 && self.node_clearance.is_finite()) {
            return fail(format!(
                "node_clearance must be positive, got {}",
                self.node_clearance
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self
            .sweep
            .busyness
            .iter()
            .any(|b| !(*b > 0.0 && b.is_finite()))
        {
            return fail("sweep busyness values must be positive".into());
        }
        if self.lstm.window != self.policy.window {
            return fail(format!(
                "lstm.window ({}) and policy.window ({}) must agree",
                self.lstm.window, self.policy.window
            ));
        }
        self.policy
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))
    }

    /// Builds the guidepath; `base` resolves relative file references.
    pub fn build_guidepath(&self, base: &Path) -> Result<GuidepathGraph, SimError> {
        let graph = match &self.guidepath {
            GuidepathSource::Grid { width, height } => {
                make_synthetic_guidepath(SyntheticKind::Grid {
                    width: *width,
                    height: *height,
                })?
            }
            GuidepathSource::Ring { nodes } => {
                make_synthetic_guidepath(SyntheticKind::Ring { nodes: *nodes })?
            }
            GuidepathSource::File(path) => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| SimError::Config(format!("{}: {e}", full.display())))?;
                load_guidepath(&text)?
            }
        };
        match &self.stations {
            Some(ids) => Ok(graph.with_stations(ids.clone())?),
            None => Ok(graph),
        }
    }

    pub fn transition_matrix(&self, stations: &[NodeId]) -> Result<TransitionMatrix, SimError> {
        match &self.workload.matrix {
            Some(rows) => {
                let m = TransitionMatrix::from_rows(rows)?;
                if m.size() != stations.len() {
                    return Err(SimError::Config(format!(
                        "transition matrix has {} rows for {} stations",
                        m.size(),
                        stations.len()
                    )));
                }
                Ok(m)
            }
            None => TransitionMatrix::dominant(stations.len(), self.workload.dominant),
        }
    }

    pub fn sweep_busyness(&self) -> Vec<f64> {
        if self.sweep.busyness.is_empty() {
            vec![self.busyness]
        } else {
            self.sweep.busyness.clone()
        }
    }

    pub fn sweep_seeds(&self) -> Vec<u64> {
        if self.sweep.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.sweep.seeds.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = ScenarioConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
        let c = ScenarioConfig::from_json(
            r#"{"guidepath":{"ring":{"nodes":12}},"scheduler":"greedy"}"#,
        )
        .unwrap();
        assert_eq!(c.guidepath, GuidepathSource::Ring { nodes: 12 });
        assert_eq!(c.vehicles, 8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_json(r#"{"vehicle":3}"#).is_err());
        let c = ScenarioConfig {
            busyness: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ScenarioConfig {
            vehicles: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn station_subset_and_matrix_size() {
        let c = ScenarioConfig {
            stations: Some(vec![0, 4, 20, 24]),
            ..Default::default()
        };
        let g = c.build_guidepath(Path::new(".")).unwrap();
        assert_eq!(g.stations().len(), 4);
        assert_eq!(c.transition_matrix(g.stations()).unwrap().size(), 4);
        let c = ScenarioConfig {
            workload: WorkloadSpec {
                matrix: Some(vec![vec![1.0]]),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(c.transition_matrix(g.stations()).is_err());
    }
}
