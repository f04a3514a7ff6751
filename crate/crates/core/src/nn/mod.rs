//! Dense autoencoders with hand-written backpropagation.
//!
//! Losses are mean squared errors averaged over both samples and elements,
//! so a batch of `B` vectors of length `L` contributes `1 / (B * L)` per
//! squared residual. Gradients are accumulated per sample in batch order,
//! which keeps training bit-reproducible for a given seed.

mod optim;
mod train;

pub use optim::{AdamState, PlateauScheduler};
pub use train::{evaluate, train, LossHistory, TrainConfig};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => libm::tanh(z),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` of shape `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() || weights.cols() == 0 || weights.rows() == 0 {
            return Err(Error::Shape(format!(
                "bias of length {} does not fit {}x{} weights",
                bias.len(),
                weights.rows(),
                weights.cols()
            )));
        }
        if !weights.all_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerics("layer parameters must be finite".into()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Uniform fan-in initialisation in `[-1/sqrt(in), 1/sqrt(in)]` for
    /// weights and bias.
    pub fn init(input: usize, output: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = 1.0 / libm::sqrt(input as f64);
        let mut draw = || (2.0 * rng.uniform() - 1.0) * bound;
        let weights = Matrix::from_fn(output, input, |_, _| draw());
        let bias = (0..output).map(|_| draw()).collect();
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.activation.apply(self.bias[j] + dot(self.weights.row(j), x));
        }
    }

    fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }
}

/// Dot product with four independent accumulators; summation order is fixed
/// so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Encoder `R^L -> R^d` followed by decoder `R^d -> R^L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    encoder: Vec<DenseLayer>,
    decoder: Vec<DenseLayer>,
}

impl AutoencoderModel {
    pub fn new(encoder: Vec<DenseLayer>, decoder: Vec<DenseLayer>) -> Result<Self> {
        if encoder.is_empty() || decoder.is_empty() {
            return Err(Error::Shape("encoder and decoder need at least one layer".into()));
        }
        let chain = encoder.iter().chain(decoder.iter()).collect::<Vec<_>>();
        for pair in chain.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer emits {} values but the next expects {}",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        let model = AutoencoderModel { encoder, decoder };
        if model.input_dim() != model.output_dim() {
            return Err(Error::Shape(format!(
                "decoder output width {} differs from input width {}",
                model.output_dim(),
                model.input_dim()
            )));
        }
        Ok(model)
    }

    /// Mirrored dense autoencoder `L -> hidden... -> d -> ...hidden -> L`.
    /// Hidden layers use `hidden_activation`; the bottleneck and the
    /// reconstruction are linear.
    pub fn build(
        input_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        hidden_activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || latent_dim == 0 || hidden.contains(&0) {
            return Err(Error::Spec("layer widths must be positive".into()));
        }
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(latent_dim);
        let mut encoder = Vec::new();
        for (i, w) in widths.windows(2).enumerate() {
            let act = if i + 2 == widths.len() {
                Activation::Linear
            } else {
                hidden_activation
            };
            encoder.push(DenseLayer::init(w[0], w[1], act, rng));
        }
        let mut decoder = Vec::new();
        let rev: Vec<usize> = widths.iter().rev().copied().collect();
        for (i, w) in rev.windows(2).enumerate() {
            let act = if i + 2 == rev.len() {
                Activation::Linear
            } else {
                hidden_activation
            };
            decoder.push(DenseLayer::init(w[0], w[1], act, rng));
        }
        Self::new(encoder, decoder)
    }

    /// Single linear layer each way with identity weights, so `d = L` and
    /// the model reproduces its input exactly.
    pub fn identity(dim: usize) -> Self {
        let layer = || DenseLayer::new(Matrix::identity(dim), vec![0.0; dim], Activation::Linear).unwrap();
        AutoencoderModel {
            encoder: vec![layer()],
            decoder: vec![layer()],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.decoder[self.decoder.len() - 1].output_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder[self.encoder.len() - 1].output_dim()
    }

    pub fn encoder(&self) -> &[DenseLayer] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[DenseLayer] {
        &self.decoder
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.encoder.iter().chain(self.decoder.iter())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(DenseLayer::param_count).sum()
    }

    /// Mutable parameter buffers in layer order, weights before bias.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn run(layers: &[DenseLayer], x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for layer in layers {
            let mut next = vec![0.0; layer.output_dim()];
            layer.forward_into(&cur, &mut next);
            cur = next;
        }
        cur
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x, self.input_dim(), "encoder input")?;
        Ok(Self::run(&self.encoder, x))
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z, self.latent_dim(), "decoder input")?;
        Ok(Self::run(&self.decoder, z))
    }

    fn check_len(&self, x: &[f64], want: usize, what: &str) -> Result<()> {
        if x.len() != want {
            return Err(Error::Shape(format!("{what} has length {}, expected {want}", x.len())));
        }
        Ok(())
    }
}

/// Runs the full autoencoder, returning `(latent, reconstruction)`.
pub fn forward(model: &AutoencoderModel, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let z = model.encode(x)?;
    let xhat = AutoencoderModel::run(&model.decoder, &z);
    if z.iter().chain(&xhat).any(|v| !v.is_finite()) {
        return Err(Error::Numerics("non-finite activation in forward pass".into()));
    }
    Ok((z, xhat))
}

/// Mean squared error over all samples and elements.
pub fn mse<X: AsRef<[f64]>, Y: AsRef<[f64]>>(xs: &[X], xhats: &[Y]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Spec("mse of an empty batch".into()));
    }
    if xs.len() != xhats.len() {
        return Err(Error::Shape(format!("{} targets vs {} reconstructions", xs.len(), xhats.len())));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, y) in xs.iter().zip(xhats) {
        let (x, y) = (x.as_ref(), y.as_ref());
        if x.len() != y.len() {
            return Err(Error::Shape(format!("vector lengths {} and {}", x.len(), y.len())));
        }
        sum += x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += x.len();
    }
    Ok(sum / count as f64)
}

/// Gradients with the same layout as [`AutoencoderModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    parts: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &AutoencoderModel) -> Self {
        Gradients {
            parts: model.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn parts(&self) -> &[Vec<f64>] {
        &self.parts
    }

    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.parts.iter().map(Vec::as_slice).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.parts.iter().flatten().copied()
    }
}

/// Reusable activation buffers for one sample.
struct Trace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Trace {
    fn new(model: &AutoencoderModel) -> Self {
        let mut acts = vec![vec![0.0; model.input_dim()]];
        acts.extend(model.layers().map(|l| vec![0.0; l.output_dim()]));
        Trace {
            acts,
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    fn forward(&mut self, model: &AutoencoderModel, x: &[f64]) {
        self.acts[0].copy_from_slice(x);
        for (i, layer) in model.layers().enumerate() {
            let (head, tail) = self.acts.split_at_mut(i + 1);
            layer.forward_into(&head[i], &mut tail[0]);
        }
    }

    fn output(&self) -> &[f64] {
        &self.acts[self.acts.len() - 1]
    }
}

/// Batch loss and its gradient.
pub fn loss_and_gradients<X: AsRef<[f64]>>(model: &AutoencoderModel, batch: &[X]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Spec("empty batch".into()));
    }
    let len = model.input_dim();
    for x in batch {
        if x.as_ref().len() != len {
            return Err(Error::Shape(format!(
                "sample has length {}, model expects {len}",
                x.as_ref().len()
            )));
        }
    }
    let scale = 2.0 / (batch.len() * len) as f64;
    let mut grads = Gradients::zeros_like(model);
    let mut trace = Trace::new(model);
    let layers: Vec<&DenseLayer> = model.layers().collect();
    let mut loss = 0.0;
    for x in batch {
        let x = x.as_ref();
        trace.forward(model, x);
        if trace.acts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerics("non-finite activation in forward pass".into()));
        }
        let last = layers.len() - 1;
        let out_act = layers[last].activation;
        let Trace { acts, delta, .. } = &mut trace;
        delta.clear();
        for (y, t) in acts[acts.len() - 1].iter().zip(x) {
            let r = y - t;
            loss += r * r;
            delta.push(scale * r * out_act.derivative_from_output(*y));
        }
        for l in (0..layers.len()).rev() {
            let layer = layers[l];
            let input = &trace.acts[l];
            let gw = &mut grads.parts[2 * l];
            let in_dim = layer.input_dim();
            for (j, &dj) in trace.delta.iter().enumerate() {
                if dj != 0.0 {
                    axpy(dj, input, &mut gw[j * in_dim..(j + 1) * in_dim]);
                }
            }
            for (gb, dj) in grads.parts[2 * l + 1].iter_mut().zip(&trace.delta) {
                *gb += dj;
            }
            if l == 0 {
                break;
            }
            trace.delta_prev.clear();
            trace.delta_prev.resize(in_dim, 0.0);
            for (j, &dj) in trace.delta.iter().enumerate() {
                if dj != 0.0 {
                    axpy(dj, layer.weights.row(j), &mut trace.delta_prev);
                }
            }
            let prev_act = layers[l - 1].activation;
            for (d, y) in trace.delta_prev.iter_mut().zip(input) {
                *d *= prev_act.derivative_from_output(*y);
            }
            core::mem::swap(&mut trace.delta, &mut trace.delta_prev);
        }
    }
    Ok((loss / (batch.len() * len) as f64, grads))
}

/// Gradient of the batch MSE with respect to every parameter.
pub fn backward<X: AsRef<[f64]>>(model: &AutoencoderModel, batch: &[X]) -> Result<Gradients> {
    loss_and_gradients(model, batch).map(|(_, g)| g)
}

/// Per-sample reconstruction errors (mean over elements).
pub fn sample_errors<X: AsRef<[f64]>>(model: &AutoencoderModel, series: &[X]) -> Result<Vec<f64>> {
    let mut trace = Trace::new(model);
    let len = model.input_dim();
    series
        .iter()
        .map(|x| {
            let x = x.as_ref();
            if x.len() != len {
                return Err(Error::Shape(format!("sample has length {}, model expects {len}", x.len())));
            }
            trace.forward(model, x);
            let e = trace.output().iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / len as f64;
            if !e.is_finite() {
                return Err(Error::Numerics("non-finite reconstruction".into()));
            }
            Ok(e)
        })
        .collect()
}
