//! Next-task-start prediction.
//!
//! Stations are addressed by their dense index in a [`StationIndex`], so the
//! network's input and output dimension is the station count rather than the
//! node count.

mod checkpoint;
mod dataset;
mod lstm;
mod markov;
mod train;

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::guidepath::NodeId;

pub use checkpoint::{read_checkpoint, write_checkpoint, LstmPredictor, CHECKPOINT_FORMAT};
pub use dataset::{sliding_windows, Dataset};
pub use lstm::{argmax, cross_entropy, softmax, ParamBlock, SequenceModel, BLOCK_NAMES};
pub use markov::{markov_fit_predict, MarkovPredictor};
pub use train::{accuracy, train, Hyperparameters, TrainReport};

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("sequence has {found} elements, need {needed}")]
    SequenceTooShort { needed: usize, found: usize },
    #[error("station index {index} out of range for {stations} stations")]
    StationOutOfRange { index: usize, stations: usize },
    #[error("node {0} is not a station")]
    UnknownStation(NodeId),
    #[error("expected {expected} parameters, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("loss became non-finite in epoch {epoch} (batch {batch}): {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bijection between station nodes and `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationIndex {
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
}

impl StationIndex {
    pub fn new(nodes: &[NodeId]) -> Self {
        let nodes = nodes.to_vec();
        let index = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        StationIndex { nodes, index }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index_of(&self, node: NodeId) -> Result<usize, PredictorError> {
        self.index
            .get(&node)
            .copied()
            .ok_or(PredictorError::UnknownStation(node))
    }

    pub fn node(&self, index: usize) -> NodeId {
        self.nodes[index]
    }

    pub fn encode(&self, nodes: &[NodeId]) -> Result<Vec<usize>, PredictorError> {
        nodes.iter().map(|n| self.index_of(*n)).collect()
    }
}

/// The last `R` task starts, oldest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSequence {
    items: VecDeque<usize>,
    capacity: usize,
}

impl TaskSequence {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window length must be positive");
        TaskSequence {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    /// Appends, dropping the oldest element when full.
    pub fn push(&mut self, station: usize) {
        if self.is_full() {
            self.items.pop_front();
        }
        self.items.push_back(station);
    }

    pub fn last(&self) -> Option<usize> {
        self.items.back().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.items.iter().copied().collect()
    }

    /// The full window, or an error while fewer than `R` starts were seen.
    pub fn window(&self) -> Result<Vec<usize>, PredictorError> {
        if !self.is_full() {
            return Err(PredictorError::SequenceTooShort {
                needed: self.capacity,
                found: self.len(),
            });
        }
        Ok(self.to_vec())
    }
}

/// One-hot rows for a full window.
pub fn encode_window(seq: &TaskSequence, stations: usize) -> Result<Vec<Vec<f64>>, PredictorError> {
    seq.window()?
        .into_iter()
        .map(|k| {
            if k >= stations {
                return Err(PredictorError::StationOutOfRange { index: k, stations });
            }
            let mut row = vec![0.0; stations];
            row[k] = 1.0;
            Ok(row)
        })
        .collect()
}

/// Most likely next station index and the full distribution.
pub fn predict_next_start(
    model: &SequenceModel,
    seq: &TaskSequence,
) -> Result<(usize, Vec<f64>), PredictorError> {
    let probs = softmax(&model.forward(&seq.window()?)?);
    Ok((argmax(&probs), probs))
}

/// Anything that can forecast the next start from recent history.
///
/// `observed` is the number of operator tasks seen so far, which lets an
/// oracle look up the true continuation.
pub trait StartPredictor {
    fn predict_next(&self, window: &[usize], observed: usize) -> Option<usize>;
}

impl StartPredictor for SequenceModel {
    fn predict_next(&self, window: &[usize], _observed: usize) -> Option<usize> {
        self.forward(window).ok().map(|logits| argmax(&logits))
    }
}

impl StartPredictor for MarkovPredictor {
    fn predict_next(&self, window: &[usize], _observed: usize) -> Option<usize> {
        window.last().map(|&j| self.predict(j))
    }
}

/// Knows the real start sequence and always answers correctly.
#[derive(Clone, Debug)]
pub struct OraclePredictor {
    pub starts: Vec<usize>,
}

impl StartPredictor for OraclePredictor {
    fn predict_next(&self, _window: &[usize], observed: usize) -> Option<usize> {
        self.starts.get(observed).copied()
    }
}
