use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::sliding_windows;
use super::lstm::{argmax, SequenceModel};
use super::PredictorError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// window length R
    pub window: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// step schedule: the rate is multiplied by `lr_decay` every `decay_every` epochs
    pub lr_decay: f64,
    pub decay_every: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            window: 5,
            hidden: 64,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.005,
            lr_decay: 0.5,
            decay_every: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            init_scale: 0.08,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let steps = epoch.checked_div(self.decay_every).unwrap_or(0);
        self.learning_rate * self.lr_decay.powi(steps as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// mean training cross-entropy of each epoch
    pub loss_trace: Vec<f64>,
    pub steps: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, hp: &Hyperparameters) {
        self.t += 1;
        let c1 = 1.0 - hp.beta1.powi(self.t);
        let c2 = 1.0 - hp.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
            *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + hp.epsilon);
        }
    }
}

/// Mini-batch Adam over all sliding windows of `train_seq`, reshuffled each
/// epoch from `hp.seed`. Gradients are averaged over the batch, then clipped
/// to global norm `hp.clip_norm`.
pub fn train(
    model: &mut SequenceModel,
    train_seq: &[usize],
    hp: &Hyperparameters,
) -> Result<TrainReport, PredictorError> {
    if train_seq.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    if train_seq.len() <= hp.window {
        return Err(PredictorError::SequenceTooShort {
            needed: hp.window + 1,
            found: train_seq.len(),
        });
    }
    let samples: Vec<(&[usize], usize)> = sliding_windows(train_seq, hp.window).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut adam = Adam::new(model.params().len());
    let mut grad = vec![0.0; model.params().len()];
    let batch_size = hp.batch_size.max(1);
    let mut loss_trace = Vec::with_capacity(hp.epochs);
    let mut steps = 0;

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let lr = hp.learning_rate_at(epoch);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (window, target) = samples[i];
                batch_loss += model.accumulate_gradient(window, target, &mut grad)?;
            }
            if !batch_loss.is_finite() {
                return Err(PredictorError::Diverged {
                    epoch,
                    batch,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > hp.clip_norm {
                let shrink = hp.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= shrink);
            }
            adam.step(model.params_mut(), &grad, lr, hp);
            steps += 1;
        }
        let mean = epoch_loss / samples.len() as f64;
        if !mean.is_finite() {
            return Err(PredictorError::Diverged {
                epoch,
                batch: 0,
                loss: mean,
            });
        }
        loss_trace.push(mean);
    }
    Ok(TrainReport { loss_trace, steps })
}

/// Top-1 accuracy over `(window, target)` samples; 0 for no samples.
pub fn accuracy<'a>(
    model: &SequenceModel,
    samples: impl IntoIterator<Item = (&'a [usize], usize)>,
) -> Result<f64, PredictorError> {
    let (mut hit, mut total) = (0usize, 0usize);
    for (window, target) in samples {
        total += 1;
        hit += usize::from(argmax(&model.forward(window)?) == target);
    }
    Ok(if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Hyperparameters {
        Hyperparameters {
            window: 1,
            hidden: 8,
            epochs: 30,
            batch_size: 8,
            learning_rate: 0.02,
            ..Default::default()
        }
    }

    #[test]
    fn learns_deterministic_cycle() {
        let seq: Vec<usize> = (0..90).map(|i| i % 3).collect();
        let hp = small();
        let mut model = SequenceModel::random(3, hp.hidden, hp.init_scale, 1);
        train(&mut model, &seq[..60], &hp).unwrap();
        let acc = accuracy(&model, sliding_windows(&seq[59..], 1)).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(argmax(&model.forward(&[1]).unwrap()), 2);
    }

    #[test]
    fn single_node_loss_goes_to_zero() {
        let seq = vec![2; 50];
        let hp = Hyperparameters {
            epochs: 40,
            ..small()
        };
        let mut model = SequenceModel::random(4, hp.hidden, hp.init_scale, 2);
        let report = train(&mut model, &seq, &hp).unwrap();
        assert!(
            *report.loss_trace.last().unwrap() < 0.01,
            "{:?}",
            report.loss_trace
        );
        assert_eq!(argmax(&model.forward(&[2]).unwrap()), 2);
    }

    #[test]
    fn too_short_and_empty() {
        let hp = Hyperparameters {
            window: 5,
            ..small()
        };
        let mut model = SequenceModel::zeros(3, 8);
        assert!(matches!(
            train(&mut model, &[], &hp),
            Err(PredictorError::EmptyDataset)
        ));
        assert!(matches!(
            train(&mut model, &[0, 1, 2], &hp),
            Err(PredictorError::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn same_seed_same_parameters() {
        let seq: Vec<usize> = (0..40).map(|i| (i * 7 + i / 3) % 4).collect();
        let hp = Hyperparameters {
            window: 3,
            epochs: 3,
            ..small()
        };
        let run = || {
            let mut m = SequenceModel::random(4, 8, 0.08, 5);
            train(&mut m, &seq, &hp).unwrap();
            m.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn huge_learning_rate_reports_divergence_or_stays_finite() {
        let seq: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let hp = Hyperparameters {
            window: 2,
            epochs: 2,
            learning_rate: 1e300,
            ..small()
        };
        let mut m = SequenceModel::random(4, 8, 0.08, 5);
        match train(&mut m, &seq, &hp) {
            Ok(r) => assert!(r.loss_trace.iter().all(|l| l.is_finite())),
            Err(e) => assert!(matches!(e, PredictorError::Diverged { .. })),
        }
    }
}
