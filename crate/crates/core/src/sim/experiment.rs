use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::config::{PredictorKind, ScenarioConfig};
use super::engine::{simulate, RunOptions, RunResult, Scenario};
use super::metrics::{improvement, MetricsRecord, MetricsRow};
use super::workload::{generate_tasks, MarkovTaskGenerator, TaskSpec, TransitionMatrix};
use super::SimError;
use crate::fleet::initial_placement;
use crate::guidepath::GuidepathGraph;
use crate::predictor::{
    read_checkpoint, train, Dataset, LstmPredictor, MarkovPredictor, OraclePredictor,
    SequenceModel, StartPredictor, StationIndex, TrainReport,
};

/// A validated config with its guidepath and workload law resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ScenarioConfig,
    pub graph: GuidepathGraph,
    pub matrix: TransitionMatrix,
    pub stations: StationIndex,
    /// directory that relative paths in the config resolve against
    pub base: PathBuf,
}

/// The same stream simulated without and with prediction.
#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub stream: Vec<TaskSpec>,
    pub baseline: RunResult,
    pub predicted: RunResult,
    pub baseline_metrics: MetricsRecord,
    pub predicted_metrics: MetricsRecord,
    /// `None` when either run deadlocked
    pub improvement: Option<f64>,
}

impl Experiment {
    pub fn new(config: ScenarioConfig, base: &Path) -> Result<Self, SimError> {
        config.validate()?;
        let graph = config.build_guidepath(base)?;
        let matrix = config.transition_matrix(graph.stations())?;
        let stations = StationIndex::new(graph.stations());
        if let Some(s) = config.workload.initial {
            if s >= stations.len() {
                return Err(SimError::Config(format!(
                    "workload.initial {s} out of range"
                )));
            }
        }
        Ok(Experiment {
            config,
            graph,
            matrix,
            stations,
            base: base.to_path_buf(),
        })
    }

    /// Vehicle placement depends on the seed, like the stream.
    pub fn scenario(&self, seed: u64) -> Result<Scenario, SimError> {
        let c = &self.config;
        let placement = initial_placement(self.graph.stations(), c.vehicles, seed);
        Scenario::new(
            self.graph.clone(),
            placement,
            c.scheduler,
            c.routing_k,
            c.node_clearance,
            c.policy.clone(),
        )
    }

    pub fn stream(&self, busyness: f64, seed: u64) -> Result<Vec<TaskSpec>, SimError> {
        let mut generator = MarkovTaskGenerator::new(
            self.graph.stations().to_vec(),
            &self.matrix,
            busyness,
            self.config.workload.initial,
            seed,
        )?;
        Ok(generate_tasks(&mut generator, self.config.tasks))
    }

    /// Station indices of the stream's starts, split into train and test.
    pub fn dataset(&self, stream: &[TaskSpec]) -> Result<Dataset, SimError> {
        let starts = stream
            .iter()
            .map(|t| self.stations.index_of(t.start))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset::temporal_split(starts, self.config.train_fraction))
    }

    pub fn train_lstm(
        &self,
        stream: &[TaskSpec],
    ) -> Result<(LstmPredictor, TrainReport), SimError> {
        let hp = &self.config.lstm;
        let data = self.dataset(stream)?;
        let mut model =
            SequenceModel::random(self.stations.len(), hp.hidden, hp.init_scale, hp.seed);
        let report = train(&mut model, data.train(), hp)?;
        Ok((
            LstmPredictor {
                model,
                window: hp.window,
                stations: self.stations.clone(),
            },
            report,
        ))
    }

    /// The configured checkpoint, or a model trained on the training part
    /// of the stream at the config's own busyness and seed.
    pub fn load_or_train_lstm(&self) -> Result<LstmPredictor, SimError> {
        match &self.config.checkpoint {
            Some(path) => {
                let file = File::open(self.base.join(path))?;
                let lstm = read_checkpoint(BufReader::new(file))?;
                if lstm.stations != self.stations || lstm.window != self.config.policy.window {
                    return Err(SimError::Config(format!(
                        "checkpoint {} does not match the scenario's stations or window",
                        path.display()
                    )));
                }
                Ok(lstm)
            }
            None => Ok(self
                .train_lstm(&self.stream(self.config.busyness, self.config.seed)?)?
                .0),
        }
    }

    /// Predictor for one stream. `lstm` must be given for [`PredictorKind::Lstm`].
    pub fn predictor<'a>(
        &self,
        kind: PredictorKind,
        stream: &[TaskSpec],
        lstm: Option<&'a LstmPredictor>,
    ) -> Result<Option<Box<dyn StartPredictor + 'a>>, SimError> {
        Ok(match kind {
            PredictorKind::None => None,
            PredictorKind::Lstm => {
                let lstm =
                    lstm.ok_or_else(|| SimError::Config("lstm predictor needs a model".into()))?;
                Some(Box::new(lstm.clone()))
            }
            PredictorKind::Markov => {
                let data = self.dataset(stream)?;
                Some(Box::new(MarkovPredictor::fit(
                    self.stations.len(),
                    data.train(),
                )))
            }
            PredictorKind::Oracle => Some(Box::new(OraclePredictor {
                starts: self.dataset(stream)?.all().to_vec(),
            })),
        })
    }

    pub fn run_stream(
        &self,
        seed: u64,
        stream: &[TaskSpec],
        predictor: Option<&dyn StartPredictor>,
    ) -> Result<(RunResult, MetricsRecord), SimError> {
        let result = simulate(
            &self.scenario(seed)?,
            stream,
            RunOptions {
                predictor,
                delays: Vec::new(),
            },
        )?;
        let metrics = MetricsRecord::from_run(&result, stream.len(), self.config.train_fraction);
        Ok((result, metrics))
    }

    pub fn run_pair(
        &self,
        busyness: f64,
        seed: u64,
        kind: PredictorKind,
        lstm: Option<&LstmPredictor>,
    ) -> Result<PairOutcome, SimError> {
        let stream = self.stream(busyness, seed)?;
        let predictor = self.predictor(kind, &stream, lstm)?;
        let (baseline, baseline_metrics) = self.run_stream(seed, &stream, None)?;
        let (predicted, predicted_metrics) =
            self.run_stream(seed, &stream, predictor.as_deref())?;
        let improvement = match (
            baseline_metrics.tau_complete,
            predicted_metrics.tau_complete,
        ) {
            (Some(_), Some(_)) => Some(improvement(&baseline_metrics, &predicted_metrics)?),
            _ => None,
        };
        Ok(PairOutcome {
            stream,
            baseline,
            predicted,
            baseline_metrics,
            predicted_metrics,
            improvement,
        })
    }

    /// Two rows per `(busyness, seed)`: the baseline, then the predicted run.
    pub fn sweep(&self, lstm: Option<&LstmPredictor>) -> Result<Vec<MetricsRow>, SimError> {
        let c = &self.config;
        let mut rows = Vec::new();
        for busyness in c.sweep_busyness() {
            for seed in c.sweep_seeds() {
                let pair = self.run_pair(busyness, seed, c.predictor, lstm)?;
                let row = |prediction: bool, m: &MetricsRecord, improvement: f64| MetricsRow {
                    scenario: c.name.clone(),
                    seed,
                    busyness,
                    scheduler: c.scheduler.as_str(),
                    prediction,
                    predictor: if prediction {
                        c.predictor.as_str()
                    } else {
                        PredictorKind::None.as_str()
                    },
                    tau_complete: m.tau_complete.unwrap_or(f64::NAN),
                    improvement: if m.deadlock { f64::NAN } else { improvement },
                    idle_fraction: m.idle_fraction,
                    status: if m.deadlock { "deadlock" } else { "completed" },
                };
                rows.push(row(false, &pair.baseline_metrics, 0.0));
                rows.push(row(
                    true,
                    &pair.predicted_metrics,
                    pair.improvement.unwrap_or(f64::NAN),
                ));
            }
        }
        Ok(rows)
    }
}

/// One run of the config as written: prediction on or off, at its own
/// busyness and seed.
pub fn run(config: &ScenarioConfig, base: &Path) -> Result<(RunResult, MetricsRecord), SimError> {
    let exp = Experiment::new(config.clone(), base)?;
    let stream = exp.stream(config.busyness, config.seed)?;
    let lstm = if config.prediction && config.predictor == PredictorKind::Lstm {
        Some(exp.load_or_train_lstm()?)
    } else {
        None
    };
    let kind = if config.prediction {
        config.predictor
    } else {
        PredictorKind::None
    };
    let predictor = exp.predictor(kind, &stream, lstm.as_ref())?;
    exp.run_stream(config.seed, &stream, predictor.as_deref())
}
