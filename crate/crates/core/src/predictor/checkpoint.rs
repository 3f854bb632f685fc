//! Checkpoint layout: one line of JSON, a `\n`, then `param_count`
//! little-endian f64 values in block order.
//!
//! ```text
//! {"format":"fleetlab-lstm","version":1,"input_dim":6,"hidden":64,"window":5,
//!  "stations":[0,4,9,...],"blocks":[{"name":"lstm1.w","rows":256,"cols":70},...],
//!  "param_count":N}
//! <8 * N bytes>
//! ```
//!
//! Every weight matrix is row-major. LSTM weight rows are the stacked gates
//! (input, forget, output, candidate), columns are `[x, h_prev]`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::lstm::{argmax, softmax, SequenceModel};
use super::{PredictorError, StartPredictor, StationIndex, TaskSequence};
use crate::guidepath::NodeId;

pub const CHECKPOINT_FORMAT: &str = "fleetlab-lstm";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BlockHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    input_dim: usize,
    hidden: usize,
    window: usize,
    stations: Vec<NodeId>,
    blocks: Vec<BlockHeader>,
    param_count: usize,
}

/// A trained model together with what it needs to answer in node terms.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmPredictor {
    pub model: SequenceModel,
    pub window: usize,
    pub stations: StationIndex,
}

impl LstmPredictor {
    /// Most likely next start node and the distribution over stations.
    pub fn predict_next_start(
        &self,
        seq: &TaskSequence,
    ) -> Result<(NodeId, Vec<f64>), PredictorError> {
        let probs = softmax(&self.model.forward(&seq.window()?)?);
        Ok((self.stations.node(argmax(&probs)), probs))
    }
}

impl StartPredictor for LstmPredictor {
    fn predict_next(&self, window: &[usize], observed: usize) -> Option<usize> {
        self.model.predict_next(window, observed)
    }
}

pub fn write_checkpoint(
    mut out: impl Write,
    predictor: &LstmPredictor,
) -> Result<(), PredictorError> {
    let model = &predictor.model;
    let header = Header {
        format: CHECKPOINT_FORMAT.to_string(),
        version: VERSION,
        input_dim: model.input_dim(),
        hidden: model.hidden(),
        window: predictor.window,
        stations: predictor.stations.nodes().to_vec(),
        blocks: model
            .blocks()
            .iter()
            .map(|b| BlockHeader {
                name: b.name.to_string(),
                rows: b.rows,
                cols: b.cols,
            })
            .collect(),
        param_count: model.params().len(),
    };
    let line =
        serde_json::to_string(&header).map_err(|e| PredictorError::Checkpoint(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(model.params().len() * 8);
    for p in model.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_checkpoint(input: impl Read) -> Result<LstmPredictor, PredictorError> {
    let bad = |msg: String| PredictorError::Checkpoint(msg);
    let mut reader = BufReader::new(input);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(bad("missing header line".into()));
    }
    let header: Header =
        serde_json::from_slice(&line[..line.len() - 1]).map_err(|e| bad(e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT || header.version != VERSION {
        return Err(bad(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    if header.stations.len() != header.input_dim {
        return Err(bad(format!(
            "{} stations for input dimension {}",
            header.stations.len(),
            header.input_dim
        )));
    }
    if header.window == 0 {
        return Err(bad("window must be positive".into()));
    }
    let expected = SequenceModel::zeros(header.input_dim, header.hidden);
    let shapes_match = header.blocks.len() == expected.blocks().len()
        && header
            .blocks
            .iter()
            .zip(expected.blocks())
            .all(|(h, b)| h.name == b.name && h.rows == b.rows && h.cols == b.cols);
    if !shapes_match || header.param_count != expected.params().len() {
        return Err(bad("parameter layout does not match dimensions".into()));
    }
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() != header.param_count * 8 {
        return Err(bad(format!(
            "expected {} parameter bytes, found {}",
            header.param_count * 8,
            raw.len()
        )));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(LstmPredictor {
        model: SequenceModel::from_params(header.input_dim, header.hidden, params)?,
        window: header.window,
        stations: StationIndex::new(&header.stations),
    })
}
