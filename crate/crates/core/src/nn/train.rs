use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{DenseLayer, DropoutMasks, Gradients, Network};
use crate::{rng, Error, LabeledDataset, Result, Scalar};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingHyperparams {
    pub epochs: usize,
    pub batch_size: usize,
    /// Step size; zero leaves the weights untouched.
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Seed for shuffling and training-time dropout masks.
    pub seed: u64,
}

impl Default for TrainingHyperparams {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl TrainingHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidHyperparams("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidHyperparams(
                "batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidHyperparams(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Mean training-mode (dropout on) cross-entropy and accuracy over one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainingReport {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }
}

/// Minibatch cross-entropy training with dropout active.
pub fn train<T: Scalar>(
    net: Network<T>,
    data: &LabeledDataset<T>,
    hp: &TrainingHyperparams,
) -> Result<(Network<T>, TrainingReport)> {
    train_with_progress(net, data, hp, |_| {})
}

/// [`train`], calling `on_epoch` after every epoch.
///
/// Epoch `e` (zero based) shuffles with substream `2e` of `hp.seed` and draws
/// its dropout masks from substream `2e + 1`.
pub fn train_with_progress<T: Scalar, F: FnMut(&EpochMetrics)>(
    mut net: Network<T>,
    data: &LabeledDataset<T>,
    hp: &TrainingHyperparams,
    mut on_epoch: F,
) -> Result<(Network<T>, TrainingReport)> {
    hp.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = data.labels().ok_or(Error::MissingLabels)?;
    if data.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: data.dim(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= net.class_count()) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: net.class_count(),
        });
    }

    let widths = net.config().hidden_widths().to_vec();
    let rate = net.dropout_rate();
    let mut optimizer = Optimizer::new(hp.optimizer, &net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainingReport::default();

    for epoch in 0..hp.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::substream(hp.seed, 2 * epoch as u64));
        let mut mask_rng = rng::substream(hp.seed, 2 * epoch as u64 + 1);

        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(hp.batch_size) {
            let inputs = data.features().select(Axis(0), chunk);
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let masks = (rate > 0.0)
                .then(|| DropoutMasks::sample(&widths, chunk.len(), rate, &mut mask_rng));
            let step = net.backprop(inputs.view(), &batch_labels, masks.as_ref());
            let batch_loss = step.loss_sum.as_f64();
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch: epoch + 1 });
            }
            loss_sum += batch_loss;
            correct += step.correct;
            optimizer.step(&mut net, &step.gradients, hp.learning_rate);
        }

        let metrics = EpochMetrics {
            epoch: epoch + 1,
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        };
        on_epoch(&metrics);
        report.epochs.push(metrics);
    }
    Ok((net, report))
}

enum Optimizer<T> {
    Sgd,
    Adam {
        m: Vec<DenseLayer<T>>,
        v: Vec<DenseLayer<T>>,
        t: i32,
    },
}

impl<T: Scalar> Optimizer<T> {
    fn new(kind: OptimizerKind, net: &Network<T>) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => {
                let zeros: Vec<DenseLayer<T>> = net
                    .layers()
                    .iter()
                    .map(|l| DenseLayer::zeros(l.inputs(), l.outputs()))
                    .collect();
                Optimizer::Adam {
                    m: zeros.clone(),
                    v: zeros,
                    t: 0,
                }
            }
        }
    }

    fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>, lr: f64) {
        let lr = T::lit(lr);
        match self {
            Optimizer::Sgd => {
                for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-lr, &g.weights);
                    layer.bias.scaled_add(-lr, &g.bias);
                }
            }
            Optimizer::Adam { m, v, t } => {
                *t += 1;
                let b1 = T::lit(ADAM_BETA1);
                let b2 = T::lit(ADAM_BETA2);
                let eps = T::lit(ADAM_EPSILON);
                let c1 = T::one() / (T::one() - b1.powi(*t));
                let c2 = T::one() / (T::one() - b2.powi(*t));
                let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
                    *m = b1 * *m + (T::one() - b1) * g;
                    *v = b2 * *v + (T::one() - b2) * g * g;
                    let m_hat = *m * c1;
                    let v_hat = *v * c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                };
                for (((layer, g), m), v) in net
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    ndarray::Zip::from(&mut layer.weights)
                        .and(&g.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                    ndarray::Zip::from(&mut layer.bias)
                        .and(&g.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                }
            }
        }
    }
}
