//! Dense feedforward network: ReLU hidden layers, softmax output, inverted
//! dropout on hidden activations, trained by mini-batch SGD or Adam.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::Dataset;
use crate::{math, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Loss {
    /// Mean over classes of `(p_c - y_c)²`, on softmax outputs.
    Mse,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_beta1"))]
        beta1: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_beta2"))]
        beta2: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_epsilon"))]
        epsilon: f64,
    },
}

#[cfg(feature = "serde")]
fn default_beta1() -> f64 {
    0.9
}

#[cfg(feature = "serde")]
fn default_beta2() -> f64 {
    0.999
}

#[cfg(feature = "serde")]
fn default_epsilon() -> f64 {
    1e-7
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NnParams {
    /// Input width, hidden widths, class count: e.g. `[D, 200, 500, C]`.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub loss: Loss,
    pub optimizer: Optimizer,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for NnParams {
    /// `[D, 200, 500, C]` for 200 epochs; the zero widths are filled from
    /// the data by [`NnParams::with_shape`].
    fn default() -> Self {
        Self::new(vec![0, 200, 500, 0], 200)
    }
}

impl NnParams {
    /// Adam at `lr = 1e-4`, cross-entropy, dropout 0.5, batch 32.
    pub fn new(layer_sizes: Vec<usize>, epochs: usize) -> Self {
        Self {
            layer_sizes,
            activation: Activation::Relu,
            loss: Loss::CrossEntropy,
            optimizer: Optimizer::adam(1e-4),
            dropout_rate: 0.5,
            epochs,
            batch_size: 32,
            seed: 0,
        }
    }

    /// Copy with a zero input width replaced by `dim` and a zero output
    /// width by `classes`.
    pub fn with_shape(&self, dim: usize, classes: usize) -> Self {
        let mut p = self.clone();
        if let Some(first) = p.layer_sizes.first_mut().filter(|w| **w == 0) {
            *first = dim;
        }
        if let Some(last) = p.layer_sizes.last_mut().filter(|w| **w == 0) {
            *last = classes;
        }
        p
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "layer_sizes needs at least input and output widths".into(),
            ));
        }
        if sizes[0] != data.dim() {
            return Err(Error::Dimension {
                expected: data.dim(),
                got: sizes[0],
            });
        }
        if *sizes.last().unwrap() != data.classes() {
            return Err(Error::Dimension {
                expected: data.classes(),
                got: *sizes.last().unwrap(),
            });
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidParameter(format!(
                "dropout rate {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn glorot(inputs: usize, outputs: usize, r: &mut rng::Rng) -> Self {
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| r.gen_range(-limit..=limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = math::dot(row, x) + b;
        }
    }
}

/// Per-epoch metrics; validation series are empty without a validation set.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingCurves {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub validation_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NeuralNet {
    pub layers: Vec<Dense>,
    pub loss: Loss,
    pub curves: TrainingCurves,
}

/// Gradients with the same shapes as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = math::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

fn sample_loss(loss: Loss, p: &[f64], label: usize) -> f64 {
    match loss {
        Loss::CrossEntropy if p[label].is_nan() => f64::NAN,
        Loss::CrossEntropy => -math::ln(p[label].max(1e-300)),
        Loss::Mse => {
            p.iter()
                .enumerate()
                .map(|(c, &pc)| {
                    let d = pc - if c == label { 1.0 } else { 0.0 };
                    d * d
                })
                .sum::<f64>()
                / p.len() as f64
        }
    }
}

/// `∂loss/∂z` for the softmax pre-activations `z`.
fn output_delta(loss: Loss, p: &[f64], label: usize, out: &mut [f64]) {
    match loss {
        Loss::CrossEntropy => {
            for (c, (o, &pc)) in out.iter_mut().zip(p).enumerate() {
                *o = pc - if c == label { 1.0 } else { 0.0 };
            }
        }
        Loss::Mse => {
            let classes = p.len() as f64;
            let dp = |c: usize| 2.0 * (p[c] - if c == label { 1.0 } else { 0.0 }) / classes;
            let inner: f64 = (0..p.len()).map(|c| dp(c) * p[c]).sum();
            for (k, o) in out.iter_mut().enumerate() {
                *o = p[k] * (dp(k) - inner);
            }
        }
    }
}

impl NeuralNet {
    pub fn init(layer_sizes: &[usize], loss: Loss, seed: u64) -> Self {
        let mut r = rng::rng(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut r))
            .collect();
        Self {
            layers,
            loss,
            curves: TrainingCurves::default(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Softmax class probabilities (inference mode, no dropout).
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.outputs];
            layer.forward(&a, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        softmax(&mut a);
        Ok(a)
    }

    /// Arg-max probability; ties go to the smaller label.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.probabilities(x)?;
        let mut best = 0;
        for (c, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Mean loss and accuracy over a dataset.
    pub fn evaluate(&self, data: &Dataset) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for i in 0..data.len() {
            let p = self.probabilities(data.row(i))?;
            loss += sample_loss(self.loss, &p, data.label(i));
            let mut best = 0;
            for (c, &v) in p.iter().enumerate() {
                if v > p[best] {
                    best = c;
                }
            }
            correct += usize::from(best == data.label(i));
        }
        let n = data.len().max(1) as f64;
        Ok((loss / n, correct as f64 / n))
    }

    fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Mean loss over `batch` and its gradient. `masks`, when given, holds
    /// one dropout multiplier per hidden unit per sample.
    fn batch_gradients(
        &self,
        data: &Dataset,
        batch: &[usize],
        masks: Option<&[Vec<f64>]>,
        grads: &mut Gradients,
    ) -> f64 {
        let n_layers = self.layers.len();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        let mut acts: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        let mut deltas: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();

        for (b, &s) in batch.iter().enumerate() {
            let x = data.row(s);
            for l in 0..n_layers {
                let (before, rest) = acts.split_at_mut(l);
                let input: &[f64] = if l == 0 { x } else { &before[l - 1] };
                self.layers[l].forward(input, &mut rest[0]);
                if l + 1 < n_layers {
                    let mask = masks.map(|m| &m[b * (n_layers - 1) + l]);
                    for (k, v) in rest[0].iter_mut().enumerate() {
                        *v = v.max(0.0);
                        if let Some(mask) = mask {
                            *v *= mask[k];
                        }
                    }
                }
            }
            softmax(&mut acts[n_layers - 1]);
            let label = data.label(s);
            total += sample_loss(self.loss, &acts[n_layers - 1], label);
            output_delta(self.loss, &acts[n_layers - 1], label, &mut deltas[n_layers - 1]);

            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
                let (gw, gb) = (&mut grads.weights[l], &mut grads.bias[l]);
                for (o, &d) in deltas[l].iter().enumerate() {
                    let d = d * scale;
                    gb[o] += d;
                    for (g, &a) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let (lower, upper) = deltas.split_at_mut(l);
                    let prev = &mut lower[l - 1];
                    let mask = masks.map(|m| &m[b * (n_layers - 1) + l - 1]);
                    for (k, p) in prev.iter_mut().enumerate() {
                        if acts[l - 1][k] <= 0.0 {
                            *p = 0.0;
                            continue;
                        }
                        let mut s = 0.0;
                        for (o, &d) in upper[0].iter().enumerate() {
                            s += layer.weights[o * layer.inputs + k] * d;
                        }
                        *p = s * mask.map_or(1.0, |m| m[k]);
                    }
                }
            }
        }
        total * scale
    }

    /// Mean loss and exact gradient over `batch` without dropout.
    pub fn loss_and_gradients(&self, data: &Dataset, batch: &[usize]) -> (f64, Gradients) {
        let mut grads = self.zero_gradients();
        let loss = self.batch_gradients(data, batch, None, &mut grads);
        (loss, grads)
    }
}

struct OptimizerState {
    step: u64,
    m: Gradients,
    v: Gradients,
}

fn apply_update(net: &mut NeuralNet, grads: &Gradients, opt: &Optimizer, state: &mut OptimizerState) {
    state.step += 1;
    for l in 0..net.layers.len() {
        let layer = &mut net.layers[l];
        let pairs = [
            (
                &mut layer.weights,
                &grads.weights[l],
                &mut state.m.weights[l],
                &mut state.v.weights[l],
            ),
            (
                &mut layer.bias,
                &grads.bias[l],
                &mut state.m.bias[l],
                &mut state.v.bias[l],
            ),
        ];
        for (params, g, m, v) in pairs {
            match *opt {
                Optimizer::Sgd { lr } => {
                    for (p, &gi) in params.iter_mut().zip(g) {
                        *p -= lr * gi;
                    }
                }
                Optimizer::Adam {
                    lr,
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let t = state.step as f64;
                    let c1 = 1.0 - math::powf(beta1, t);
                    let c2 = 1.0 - math::powf(beta2, t);
                    for i in 0..params.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        params[i] -= lr * m_hat / (math::sqrt(v_hat) + epsilon);
                    }
                }
            }
        }
    }
}

/// Training loop. `dropout: None` skips masking entirely.
fn train_loop(
    data: &Dataset,
    validation: Option<&Dataset>,
    params: &NnParams,
    dropout: Option<f64>,
) -> Result<NeuralNet> {
    params.validate(data)?;
    let mut net = NeuralNet::init(&params.layer_sizes, params.loss, params.seed);
    let mut state = OptimizerState {
        step: 0,
        m: net.zero_gradients(),
        v: net.zero_gradients(),
    };
    let mut shuffle_rng = rng::child(params.seed, 1);
    let mut dropout_rng = rng::child(params.seed, 2);
    let hidden: Vec<usize> = params.layer_sizes[1..params.layer_sizes.len() - 1].to_vec();
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(params.batch_size) {
            let masks = dropout.map(|rate| {
                let keep_scale = 1.0 / (1.0 - rate);
                batch
                    .iter()
                    .flat_map(|_| hidden.iter())
                    .map(|&width| {
                        (0..width)
                            .map(|_| {
                                if dropout_rng.gen::<f64>() < rate {
                                    0.0
                                } else {
                                    keep_scale
                                }
                            })
                            .collect::<Vec<f64>>()
                    })
                    .collect::<Vec<_>>()
            });
            let mut grads = net.zero_gradients();
            let loss = net.batch_gradients(data, batch, masks.as_deref(), &mut grads);
            if !loss.is_finite() {
                return Err(Error::Numeric {
                    iteration: epoch,
                    what: format!("loss is {loss}"),
                });
            }
            apply_update(&mut net, &grads, &params.optimizer, &mut state);
        }
        let (loss, acc) = net.evaluate(data)?;
        if !loss.is_finite() {
            return Err(Error::Numeric {
                iteration: epoch,
                what: format!("loss is {loss}"),
            });
        }
        net.curves.train_loss.push(loss);
        net.curves.train_accuracy.push(acc);
        if let Some(val) = validation {
            let (loss, acc) = net.evaluate(val)?;
            net.curves.validation_loss.push(loss);
            net.curves.validation_accuracy.push(acc);
        }
    }
    Ok(net)
}

/// Trains a network on `data`, tracking `validation` per epoch if given.
pub fn nn_train(data: &Dataset, validation: Option<&Dataset>, params: &NnParams) -> Result<NeuralNet> {
    let params = params.with_shape(data.dim(), data.classes());
    train_loop(data, validation, &params, Some(params.dropout_rate))
}
