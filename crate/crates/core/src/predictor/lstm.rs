//! Two-layer LSTM over one-hot station sequences, followed by a tanh fully
//! connected layer and a linear output layer producing one logit per station.
//!
//! All parameters live in one flat vector; [`ParamBlock`] describes the
//! row-major matrices inside it. Gate rows are stacked in the order
//! input, forget, output, candidate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PredictorError;

/// Names of the parameter blocks, in storage order.
pub const BLOCK_NAMES: [&str; 8] = [
    "lstm1.w", "lstm1.b", "lstm2.w", "lstm2.b", "fc.w", "fc.b", "out.w", "out.b",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

fn layout(input_dim: usize, hidden: usize) -> [ParamBlock; 8] {
    let shapes = [
        (4 * hidden, input_dim + hidden),
        (4 * hidden, 1),
        (4 * hidden, 2 * hidden),
        (4 * hidden, 1),
        (hidden, hidden),
        (hidden, 1),
        (input_dim, hidden),
        (input_dim, 1),
    ];
    let mut offset = 0;
    let mut out = [ParamBlock {
        name: "",
        rows: 0,
        cols: 0,
        offset: 0,
    }; 8];
    for (i, (rows, cols)) in shapes.into_iter().enumerate() {
        out[i] = ParamBlock {
            name: BLOCK_NAMES[i],
            rows,
            cols,
            offset,
        };
        offset += rows * cols;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceModel {
    input_dim: usize,
    hidden: usize,
    blocks: [ParamBlock; 8],
    params: Vec<f64>,
}

/// Activations of one LSTM layer at one time step.
#[derive(Clone, Debug)]
struct StepCache {
    /// gate activations `[i, f, o, g]`, each `hidden` long
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Everything the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    inputs: Vec<usize>,
    layer1: Vec<StepCache>,
    layer2: Vec<StepCache>,
    fc: Vec<f64>,
    logits: Vec<f64>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl SequenceModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let blocks = layout(input_dim, hidden);
        let total = blocks[7].offset + blocks[7].len();
        SequenceModel {
            input_dim,
            hidden,
            blocks,
            params: vec![0.0; total],
        }
    }

    /// Parameters drawn uniformly from `[-scale, scale)`.
    pub fn random(input_dim: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut model = Self::zeros(input_dim, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in model.params.iter_mut() {
            *p = rng.random_range(-scale..scale);
        }
        model
    }

    pub fn from_params(
        input_dim: usize,
        hidden: usize,
        params: Vec<f64>,
    ) -> Result<Self, PredictorError> {
        let mut model = Self::zeros(input_dim, hidden);
        if params.len() != model.params.len() {
            return Err(PredictorError::DimensionMismatch {
                expected: model.params.len(),
                found: params.len(),
            });
        }
        model.params = params;
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn blocks(&self) -> &[ParamBlock; 8] {
        &self.blocks
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn block(&self, i: usize) -> &[f64] {
        &self.params[self.blocks[i].range()]
    }

    /// One LSTM step. `input` is either a one-hot index (`Err`) or a dense vector.
    fn cell(&self, w: usize, b: usize, x: Input<'_>, h_prev: &[f64], c_prev: &[f64]) -> StepCache {
        let hsz = self.hidden;
        let cols = self.blocks[w].cols;
        let weights = self.block(w);
        let bias = self.block(b);
        let x_len = cols - hsz;
        let mut z = bias.to_vec();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &weights[r * cols..(r + 1) * cols];
            *zr += match x {
                Input::OneHot(k) => row[k],
                Input::Dense(v) => dot(&row[..x_len], v),
            };
            *zr += dot(&row[x_len..], h_prev);
        }
        let mut gates = z;
        for (r, g) in gates.iter_mut().enumerate() {
            *g = if r < 3 * hsz { sigmoid(*g) } else { g.tanh() };
        }
        let mut c = vec![0.0; hsz];
        let mut tanh_c = vec![0.0; hsz];
        let mut h = vec![0.0; hsz];
        for k in 0..hsz {
            let (i, f, o, g) = (
                gates[k],
                gates[hsz + k],
                gates[2 * hsz + k],
                gates[3 * hsz + k],
            );
            c[k] = f * c_prev[k] + i * g;
            tanh_c[k] = c[k].tanh();
            h[k] = o * tanh_c[k];
        }
        StepCache {
            gates,
            c,
            tanh_c,
            h,
        }
    }

    fn check_window(&self, window: &[usize]) -> Result<(), PredictorError> {
        if window.is_empty() {
            return Err(PredictorError::SequenceTooShort {
                needed: 1,
                found: 0,
            });
        }
        if let Some(&bad) = window.iter().find(|&&k| k >= self.input_dim) {
            return Err(PredictorError::StationOutOfRange {
                index: bad,
                stations: self.input_dim,
            });
        }
        Ok(())
    }

    /// Runs the network over a window of station indices.
    pub fn trace(&self, window: &[usize]) -> Result<ForwardTrace, PredictorError> {
        self.check_window(window)?;
        let hsz = self.hidden;
        let zeros = vec![0.0; hsz];
        let mut layer1: Vec<StepCache> = Vec::with_capacity(window.len());
        let mut layer2: Vec<StepCache> = Vec::with_capacity(window.len());
        for (t, &k) in window.iter().enumerate() {
            let (h1, c1) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&layer1[t - 1].h, &layer1[t - 1].c)
            };
            let s1 = self.cell(0, 1, Input::OneHot(k), h1, c1);
            let (h2, c2) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&layer2[t - 1].h, &layer2[t - 1].c)
            };
            let s2 = self.cell(2, 3, Input::Dense(&s1.h), h2, c2);
            layer1.push(s1);
            layer2.push(s2);
        }
        let top = &layer2.last().expect("non-empty window").h;
        let fc_w = self.block(4);
        let fc_b = self.block(5);
        let fc: Vec<f64> = (0..hsz)
            .map(|r| (fc_b[r] + dot(&fc_w[r * hsz..(r + 1) * hsz], top)).tanh())
            .collect();
        let out_w = self.block(6);
        let out_b = self.block(7);
        let logits = (0..self.input_dim)
            .map(|r| out_b[r] + dot(&out_w[r * hsz..(r + 1) * hsz], &fc))
            .collect();
        Ok(ForwardTrace {
            inputs: window.to_vec(),
            layer1,
            layer2,
            fc,
            logits,
        })
    }

    /// Logits over stations for the window.
    pub fn forward(&self, window: &[usize]) -> Result<Vec<f64>, PredictorError> {
        Ok(self.trace(window)?.logits)
    }

    /// Cross-entropy of `target` under softmax(logits).
    pub fn loss(&self, window: &[usize], target: usize) -> Result<f64, PredictorError> {
        let logits = self.forward(window)?;
        Ok(cross_entropy(&logits, target))
    }

    /// Adds d(loss)/d(params) into `grad` and returns the loss.
    pub fn accumulate_gradient(
        &self,
        window: &[usize],
        target: usize,
        grad: &mut [f64],
    ) -> Result<f64, PredictorError> {
        if target >= self.input_dim {
            return Err(PredictorError::StationOutOfRange {
                index: target,
                stations: self.input_dim,
            });
        }
        assert_eq!(grad.len(), self.params.len());
        let trace = self.trace(window)?;
        let loss = cross_entropy(&trace.logits, target);
        self.backward(&trace, target, grad);
        Ok(loss)
    }

    fn backward(&self, trace: &ForwardTrace, target: usize, grad: &mut [f64]) {
        let hsz = self.hidden;
        let v = self.input_dim;
        let steps = trace.inputs.len();

        let mut dlogits = softmax(&trace.logits);
        dlogits[target] -= 1.0;

        // output layer
        let out_w = self.block(6).to_vec();
        let mut dfc = vec![0.0; hsz];
        {
            let ow = self.blocks[6];
            let ob = self.blocks[7];
            for r in 0..v {
                axpy(
                    dlogits[r],
                    &trace.fc,
                    &mut grad[ow.offset + r * hsz..ow.offset + (r + 1) * hsz],
                );
                grad[ob.offset + r] += dlogits[r];
                axpy(dlogits[r], &out_w[r * hsz..(r + 1) * hsz], &mut dfc);
            }
        }
        // fully connected tanh layer
        let top = &trace.layer2[steps - 1].h;
        let mut dtop = vec![0.0; hsz];
        {
            let fw = self.blocks[4];
            let fb = self.blocks[5];
            let fc_w = self.block(4);
            for r in 0..hsz {
                let dz = dfc[r] * (1.0 - trace.fc[r] * trace.fc[r]);
                axpy(
                    dz,
                    top,
                    &mut grad[fw.offset + r * hsz..fw.offset + (r + 1) * hsz],
                );
                grad[fb.offset + r] += dz;
                axpy(dz, &fc_w[r * hsz..(r + 1) * hsz], &mut dtop);
            }
        }

        // layer 2 through time; collects gradients w.r.t. layer-1 outputs
        let mut dh1_from_above = vec![vec![0.0; hsz]; steps];
        let mut dh = dtop;
        let mut dc = vec![0.0; hsz];
        for t in (0..steps).rev() {
            let h_prev = if t == 0 {
                None
            } else {
                Some(&trace.layer2[t - 1])
            };
            let dx = self.cell_backward(
                2,
                3,
                &trace.layer2[t],
                h_prev,
                Input::Dense(&trace.layer1[t].h),
                &mut dh,
                &mut dc,
                grad,
            );
            dh1_from_above[t] = dx.expect("dense input yields input gradient");
        }

        // layer 1 through time
        let mut dh = vec![0.0; hsz];
        let mut dc = vec![0.0; hsz];
        for t in (0..steps).rev() {
            axpy(1.0, &dh1_from_above[t], &mut dh);
            let h_prev = if t == 0 {
                None
            } else {
                Some(&trace.layer1[t - 1])
            };
            self.cell_backward(
                0,
                1,
                &trace.layer1[t],
                h_prev,
                Input::OneHot(trace.inputs[t]),
                &mut dh,
                &mut dc,
                grad,
            );
        }
    }

    /// Backprop through one cell. On entry `dh`/`dc` hold the gradients
    /// w.r.t. this step's outputs; on exit, w.r.t. the previous step's.
    /// Returns the gradient w.r.t. a dense input.
    #[allow(clippy::too_many_arguments)]
    fn cell_backward(
        &self,
        w: usize,
        b: usize,
        step: &StepCache,
        prev: Option<&StepCache>,
        x: Input<'_>,
        dh: &mut Vec<f64>,
        dc: &mut Vec<f64>,
        grad: &mut [f64],
    ) -> Option<Vec<f64>> {
        let hsz = self.hidden;
        let wb = self.blocks[w];
        let bb = self.blocks[b];
        let cols = wb.cols;
        let x_len = cols - hsz;
        let weights = self.block(w);
        let g = &step.gates;

        let mut dz = vec![0.0; 4 * hsz];
        let mut dc_prev = vec![0.0; hsz];
        for k in 0..hsz {
            let (i, f, o, cand) = (g[k], g[hsz + k], g[2 * hsz + k], g[3 * hsz + k]);
            let c_prev = prev.map_or(0.0, |p| p.c[k]);
            let d_o = dh[k] * step.tanh_c[k];
            let dck = dc[k] + dh[k] * o * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            dz[k] = dck * cand * i * (1.0 - i);
            dz[hsz + k] = dck * c_prev * f * (1.0 - f);
            dz[2 * hsz + k] = d_o * o * (1.0 - o);
            dz[3 * hsz + k] = dck * i * (1.0 - cand * cand);
            dc_prev[k] = dck * f;
        }

        let mut dx = match x {
            Input::Dense(_) => Some(vec![0.0; x_len]),
            Input::OneHot(_) => None,
        };
        let mut dh_prev = vec![0.0; hsz];
        for r in 0..4 * hsz {
            let d = dz[r];
            if d == 0.0 {
                continue;
            }
            grad[bb.offset + r] += d;
            let row_off = wb.offset + r * cols;
            match x {
                Input::OneHot(k) => grad[row_off + k] += d,
                Input::Dense(v) => axpy(d, v, &mut grad[row_off..row_off + x_len]),
            }
            if let Some(p) = prev {
                axpy(d, &p.h, &mut grad[row_off + x_len..row_off + cols]);
            }
            let row = &weights[r * cols..(r + 1) * cols];
            if let Some(dx) = dx.as_mut() {
                axpy(d, &row[..x_len], dx);
            }
            axpy(d, &row[x_len..], &mut dh_prev);
        }
        *dh = dh_prev;
        *dc = dc_prev;
        dx
    }
}

#[derive(Clone, Copy)]
enum Input<'a> {
    OneHot(usize),
    Dense(&'a [f64]),
}

/// `-log softmax(logits)[target]`, computed stably.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}
