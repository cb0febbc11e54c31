use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{softmax_in_place, Activation};
use crate::{argmax, rng, Error, Result, Scalar};

/// Architecture and dropout settings of a [`Network`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Input width, hidden widths, then output width `K`.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    /// Probability of zeroing a hidden unit, in `[0, 1)`.
    pub dropout_rate: f64,
    /// Seed for weight initialization.
    pub seed: u64,
    pub class_count: usize,
}

impl NetworkConfig {
    /// Builds a config whose `class_count` is the last layer width.
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden_activation: Activation,
        dropout_rate: f64,
        seed: u64,
    ) -> Self {
        let class_count = layer_sizes.last().copied().unwrap_or(0);
        Self {
            layer_sizes,
            hidden_activation,
            dropout_rate,
            seed,
            class_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "need input, at least one hidden layer and output; got layer sizes {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must be positive: {:?}",
                self.layer_sizes
            )));
        }
        if self.class_count == 0 || self.layer_sizes.last() != Some(&self.class_count) {
            return Err(Error::InvalidConfig(format!(
                "output width {:?} does not equal class count {}",
                self.layer_sizes.last(),
                self.class_count
            )));
        }
        if !(self.dropout_rate.is_finite() && (0.0..1.0).contains(&self.dropout_rate)) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Widths of the hidden layers, the only layers dropout touches.
    pub fn hidden_widths(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }
}

/// Weights are stored `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub(crate) fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Same ordering as [`Network::parameters`].
    pub fn flatten(&self) -> Vec<T> {
        flatten_layers(&self.layers)
    }
}

/// Inverted-dropout masks for a batch: one `(rows, width)` matrix per hidden
/// layer whose entries are `0` or `1 / (1 - rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks<T> {
    pub layers: Vec<Array2<T>>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub(crate) fn ones(widths: &[usize], rows: usize) -> Self {
        Self {
            layers: widths.iter().map(|&w| Array2::ones((rows, w))).collect(),
        }
    }

    /// Draws every row from `rng`, row by row and layer by layer within a row.
    pub fn sample<R: Rng + ?Sized>(widths: &[usize], rows: usize, rate: f64, rng: &mut R) -> Self {
        let mut masks = Self::ones(widths, rows);
        for row in 0..rows {
            masks.fill_row(row, rate, rng);
        }
        masks
    }

    /// Redraws one row. A unit survives when a uniform draw is `>= rate`.
    pub fn fill_row<R: Rng + ?Sized>(&mut self, row: usize, rate: f64, rng: &mut R) {
        let scale = T::lit(1.0 / (1.0 - rate));
        for layer in &mut self.layers {
            for v in layer.row_mut(row).iter_mut() {
                *v = if rng.random::<f64>() >= rate {
                    scale
                } else {
                    T::zero()
                };
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.layers.first().map_or(0, |m| m.nrows())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput<T> {
    pub logits: Vec<T>,
    pub probabilities: Vec<T>,
}

/// Feed-forward classifier: dense layers, hidden activation, dropout on the
/// output of each hidden layer, softmax over the logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T: Scalar = f64> {
    config: NetworkConfig,
    layers: Vec<DenseLayer<T>>,
}

/// Intermediate values of a batched forward pass.
pub(crate) struct Trace<T> {
    /// Masked hidden outputs, one per hidden layer.
    pub hidden: Vec<Array2<T>>,
    /// Hidden pre-activations, one per hidden layer.
    pub pre: Vec<Array2<T>>,
    pub logits: Array2<T>,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases,
    /// drawn from the config seed in layer order, row-major.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(config.seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = DenseLayer::zeros(fan_in, fan_out);
                for v in layer.weights.iter_mut() {
                    *v = T::lit((2.0 * rng.random::<f64>() - 1.0) * limit);
                }
                layer
            })
            .collect();
        Ok(Self { config, layers })
    }

    /// Assembles a network from explicit layers, checking shapes and finiteness.
    pub fn from_layers(config: NetworkConfig, layers: Vec<DenseLayer<T>>) -> Result<Self> {
        config.validate()?;
        let expected = config.layer_sizes.len() - 1;
        if layers.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "expected {expected} layers, got {}",
                layers.len()
            )));
        }
        for (layer, w) in layers.iter().zip(config.layer_sizes.windows(2)) {
            if layer.weights.dim() != (w[1], w[0]) || layer.bias.len() != w[1] {
                return Err(Error::InvalidConfig(format!(
                    "layer shape {:?} / bias {} does not match sizes {}x{}",
                    layer.weights.dim(),
                    layer.bias.len(),
                    w[1],
                    w[0]
                )));
            }
            if !layer.weights.iter().chain(layer.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::NonFinite("network weights"));
            }
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.config.class_count
    }

    pub fn dropout_rate(&self) -> f64 {
        self.config.dropout_rate
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters, per layer: weights row-major, then bias.
    pub fn parameters(&self) -> Vec<T> {
        flatten_layers(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        if !input.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    fn check_batch(&self, inputs: &ArrayView2<T>) -> Result<()> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: inputs.ncols(),
            });
        }
        if !inputs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// One forward pass. With `dropout_active`, a fresh mask is drawn from
    /// `rng` for every hidden layer; otherwise `rng` is not touched.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &[T],
        dropout_active: bool,
        rng: &mut R,
    ) -> Result<ForwardOutput<T>> {
        self.check_input(input)?;
        let masks = dropout_active.then(|| {
            DropoutMasks::sample(self.config.hidden_widths(), 1, self.dropout_rate(), rng)
        });
        Ok(self.forward_single(input, masks.as_ref()))
    }

    /// Deterministic pass (dropout off).
    pub fn predict(&self, input: &[T]) -> Result<ForwardOutput<T>> {
        self.check_input(input)?;
        Ok(self.forward_single(input, None))
    }

    fn forward_single(&self, input: &[T], masks: Option<&DropoutMasks<T>>) -> ForwardOutput<T> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let trace = self.trace(x, masks);
        let logits = trace.logits.row(0).to_vec();
        let mut probabilities = logits.clone();
        softmax_in_place(&mut probabilities);
        ForwardOutput {
            logits,
            probabilities,
        }
    }

    /// Deterministic logits for a batch of rows.
    pub fn logits_batch(&self, inputs: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_batch(&inputs)?;
        Ok(self.trace(inputs, None).logits)
    }

    /// Runs one input through `masks.rows()` dropout configurations at once and
    /// returns the probability rows. The first layer does not depend on the
    /// masks, so it is evaluated once.
    pub fn forward_replicated(&self, input: &[T], masks: &DropoutMasks<T>) -> Result<Array2<T>> {
        self.check_input(input)?;
        let rows = masks.rows();
        let act = self.config.hidden_activation;
        let first = &self.layers[0];
        let x = ndarray::ArrayView1::from(input);
        let a0 = (first.weights.dot(&x) + &first.bias).mapv(|z| act.apply(z));
        let mut h = &masks.layers[0] * &a0.broadcast((rows, a0.len())).expect("broadcast");
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            let mut z = h.dot(&layer.weights.t());
            z += &layer.bias;
            if i == last {
                h = z;
            } else {
                z.mapv_inplace(|v| act.apply(v));
                z *= &masks.layers[i];
                h = z;
            }
        }
        for mut row in h.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(h)
    }

    pub(crate) fn trace(&self, inputs: ArrayView2<T>, masks: Option<&DropoutMasks<T>>) -> Trace<T> {
        let act = self.config.hidden_activation;
        let last = self.layers.len() - 1;
        let mut hidden = Vec::with_capacity(last);
        let mut pre = Vec::with_capacity(last);
        let mut logits = None;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 {
                inputs.view()
            } else {
                hidden.last().map(|h: &Array2<T>| h.view()).expect("previous layer")
            };
            let mut z = input.dot(&layer.weights.t());
            z += &layer.bias;
            if i == last {
                logits = Some(z);
            } else {
                let mut a = z.mapv(|v| act.apply(v));
                if let Some(m) = masks {
                    a *= &m.layers[i];
                }
                pre.push(z);
                hidden.push(a);
            }
        }
        Trace {
            hidden,
            pre,
            logits: logits.expect("at least one layer"),
        }
    }

    /// Mean cross-entropy of the softmax output against `labels`.
    pub fn loss(
        &self,
        inputs: ArrayView2<T>,
        labels: &[usize],
        masks: Option<&DropoutMasks<T>>,
    ) -> Result<T> {
        self.loss_and_gradient(inputs, labels, masks).map(|(l, _)| l)
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_gradient(
        &self,
        inputs: ArrayView2<T>,
        labels: &[usize],
        masks: Option<&DropoutMasks<T>>,
    ) -> Result<(T, Gradients<T>)> {
        self.check_batch(&inputs)?;
        if labels.len() != inputs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: inputs.nrows(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.class_count()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: self.class_count(),
            });
        }
        if let Some(m) = masks {
            if m.rows() != inputs.nrows() || m.layers.len() != self.layers.len() - 1 {
                return Err(Error::DimensionMismatch {
                    expected: inputs.nrows(),
                    actual: m.rows(),
                });
            }
        }
        let step = self.backprop(inputs, labels, masks);
        Ok((step.loss_sum / T::lit(labels.len() as f64), step.gradients))
    }

    /// Unchecked forward + backward pass over a batch. Loss is summed, the
    /// gradient is that of the batch mean.
    pub(crate) fn backprop(
        &self,
        inputs: ArrayView2<T>,
        labels: &[usize],
        masks: Option<&DropoutMasks<T>>,
    ) -> BackpropStep<T> {
        let act = self.config.hidden_activation;
        let batch = inputs.nrows();
        let trace = self.trace(inputs, masks);

        let mut delta = trace.logits;
        let mut loss_sum = T::zero();
        let mut correct = 0;
        let inv_batch = T::one() / T::lit(batch as f64);
        for (mut row, &y) in delta.rows_mut().into_iter().zip(labels) {
            let z = row.as_slice_mut().expect("standard layout");
            if argmax(z) == y {
                correct += 1;
            }
            let max = z.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let log_norm = z.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
            loss_sum += log_norm - z[y];
            for v in z.iter_mut() {
                *v = (*v - log_norm).exp();
            }
            z[y] -= T::one();
            for v in z.iter_mut() {
                *v *= inv_batch;
            }
        }

        let mut grads: Vec<DenseLayer<T>> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 {
                inputs.view()
            } else {
                trace.hidden[i - 1].view()
            };
            let gw = delta.t().dot(&input);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut d = delta.dot(&self.layers[i].weights);
                if let Some(m) = masks {
                    d *= &m.layers[i - 1];
                }
                ndarray::Zip::from(&mut d)
                    .and(&trace.pre[i - 1])
                    .for_each(|g, &z| *g *= act.derivative(z));
                delta = d;
            }
            grads.push(DenseLayer {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        BackpropStep {
            loss_sum,
            correct,
            gradients: Gradients { layers: grads },
        }
    }
}

pub(crate) struct BackpropStep<T> {
    pub loss_sum: T,
    pub correct: usize,
    pub gradients: Gradients<T>,
}

fn flatten_layers<T: Scalar>(layers: &[DenseLayer<T>]) -> Vec<T> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}
