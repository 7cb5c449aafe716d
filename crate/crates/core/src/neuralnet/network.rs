use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_DROPOUT: f64 = 0.2;

/// Layer sizes from input to output, e.g. `[500, 1000, 2048]`, plus the
/// dropout rate applied to every hidden layer during training.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub layer_sizes: Vec<usize>,
    pub dropout: f64,
}

impl NetworkConfig {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        Self::with_dropout(layer_sizes, DEFAULT_DROPOUT)
    }

    pub fn with_dropout(layer_sizes: Vec<usize>, dropout: f64) -> Result<Self> {
        let config = NetworkConfig { layer_sizes, dropout };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs at least an input and an output size".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// One affine transform: `rows × cols` weights (row-major) and `rows` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::dims("layer weights", rows * cols, weights.len()));
        }
        if bias.len() != rows {
            return Err(Error::dims("layer bias", rows, bias.len()));
        }
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    /// `W x + b`, skipping zero inputs (sparse count vectors are common here).
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        let active: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        let mut out = self.bias.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for &j in &active {
                acc += row[j] * x[j];
            }
            *o += acc;
        }
        out
    }
}

/// The parameters `[W1, b1, …, Wl, bl]`. The same shape is reused for
/// gradients and optimizer accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Layer>,
}

/// Per-hidden-layer multipliers: `0` for dropped units, `1/(1-p)` for kept ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<Vec<f64>>);

impl DropoutMasks {
    /// Draws one mask per hidden layer. With `rate == 0` nothing is drawn.
    pub fn sample<R: Rng>(params: &NetworkParams, rate: f64, rng: &mut R) -> Self {
        let hidden = &params.layers[..params.layers.len() - 1];
        let keep_scale = 1.0 / (1.0 - rate);
        DropoutMasks(
            hidden
                .iter()
                .map(|layer| {
                    if rate == 0.0 {
                        vec![1.0; layer.rows]
                    } else {
                        (0..layer.rows)
                            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep_scale })
                            .collect()
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Train(&'a DropoutMasks),
    Infer,
}

/// Everything backpropagation needs from a forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `outputs[0]` is the input; `outputs[i]` is layer `i` after ReLU and dropout.
    pub outputs: Vec<Vec<f64>>,
    /// Pre-activations `W h + b` per layer.
    pub pre: Vec<Vec<f64>>,
    masks: Option<DropoutMasks>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().unwrap()
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Mean over dimensions of the squared difference.
pub fn mse_loss(prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::dims("mse target", prediction.len(), target.len()));
    }
    if prediction.is_empty() {
        return Err(Error::Empty("mse of empty vectors".into()));
    }
    let sum: f64 = prediction.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / prediction.len() as f64)
}

/// Mean of per-pair [`mse_loss`] values.
pub fn batch_mse_loss(predictions: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::dims("batch size", predictions.len(), targets.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("empty batch".into()));
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        total += mse_loss(p, t)?;
    }
    Ok(total / predictions.len() as f64)
}

impl NetworkParams {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return Err(Error::Config(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layer.cols != layers[i - 1].rows {
                return Err(Error::dims(format!("layer {i} input"), layers[i - 1].rows, layer.cols));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("layer {i} has non-finite entries")));
            }
        }
        Ok(NetworkParams { layers })
    }

    /// Fan-based uniform init in `±sqrt(6 / (n_in + n_out))`, zero biases.
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let weights = (0..n_in * n_out)
                    .map(|_| limit * (2.0 * rng.gen::<f64>() - 1.0))
                    .collect();
                Layer {
                    rows: n_out,
                    cols: n_in,
                    weights,
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(NetworkParams { layers })
    }

    /// Same shapes as `self`, all zero.
    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            layers: self.layers.iter().map(|l| Layer::zeros(l.rows, l.cols)).collect(),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].cols)
            .chain(self.layers.iter().map(|l| l.rows))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All values flattened layer by layer: weights then bias.
    pub fn iter_values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn iter_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.rows == b.rows && a.cols == b.cols)
    }

    pub fn forward(&self, input: &[f64], mode: Mode<'_>) -> Result<Activations> {
        if input.len() != self.input_dim() {
            return Err(Error::dims("network input", self.input_dim(), input.len()));
        }
        let masks = match mode {
            Mode::Train(m) => {
                let hidden = self.layers.len() - 1;
                if m.0.len() != hidden {
                    return Err(Error::dims("dropout masks", hidden, m.0.len()));
                }
                for (i, mask) in m.0.iter().enumerate() {
                    if mask.len() != self.layers[i].rows {
                        return Err(Error::dims(
                            format!("dropout mask {i}"),
                            self.layers[i].rows,
                            mask.len(),
                        ));
                    }
                }
                Some(m.clone())
            }
            Mode::Infer => None,
        };
        let last = self.layers.len() - 1;
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        outputs.push(input.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&outputs[i]);
            let mut h: Vec<f64> = z.iter().map(|&v| relu(v)).collect();
            if let (Some(m), true) = (&masks, i < last) {
                h.iter_mut().zip(&m.0[i]).for_each(|(v, k)| *v *= k);
            }
            pre.push(z);
            outputs.push(h);
        }
        Ok(Activations { outputs, pre, masks })
    }

    /// Inference-mode forward pass returning only the output layer.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward(input, Mode::Infer)
            .map(|a| a.outputs.into_iter().last().unwrap())
    }

    /// [`predict`](Self::predict) over many inputs, in parallel, order preserved.
    pub fn predict_many(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        inputs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Accumulates into `grads` the gradient of `scale * mse(output, target)`.
    ///
    /// The ReLU derivative at exactly zero is taken as zero.
    pub fn backward(&self, acts: &Activations, target: &[f64], scale: f64, grads: &mut NetworkParams) -> Result<()> {
        if !self.same_shape(grads) {
            return Err(Error::Config("gradient buffer shape differs from params".into()));
        }
        if acts.outputs.len() != self.layers.len() + 1 || acts.outputs[0].len() != self.input_dim() {
            return Err(Error::Config("activations do not match this network".into()));
        }
        let output = acts.output();
        if target.len() != output.len() {
            return Err(Error::dims("backward target", output.len(), target.len()));
        }
        let d = output.len() as f64;
        // dL/dh for the current layer's output.
        let mut upstream: Vec<f64> = output
            .iter()
            .zip(target)
            .map(|(r, t)| scale * 2.0 * (r - t) / d)
            .collect();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let mut delta = upstream;
            if let (Some(m), true) = (&acts.masks, i + 1 < self.layers.len()) {
                delta.iter_mut().zip(&m.0[i]).for_each(|(g, k)| *g *= k);
            }
            delta.iter_mut().zip(&acts.pre[i]).for_each(|(g, &z)| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });

            let input = &acts.outputs[i];
            let g = &mut grads.layers[i];
            for (r, &dr) in delta.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                g.bias[r] += dr;
                let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                for (w, &x) in row.iter_mut().zip(input) {
                    if x != 0.0 {
                        *w += dr * x;
                    }
                }
            }
            if i == 0 {
                break;
            }
            let mut next = vec![0.0; layer.cols];
            for (r, &dr) in delta.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                next.iter_mut().zip(row).for_each(|(n, w)| *n += w * dr);
            }
            upstream = next;
        }
        Ok(())
    }

    /// Batch MSE (mean over pairs of the per-pair dimension mean) and its gradient.
    pub fn loss_and_gradients(&self, batch: &[(&[f64], &[f64], Mode<'_>)]) -> Result<(f64, NetworkParams)> {
        if batch.is_empty() {
            return Err(Error::Empty("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        for &(input, target, mode) in batch {
            let acts = self.forward(input, mode)?;
            loss += mse_loss(acts.output(), target)?;
            self.backward(&acts, target, scale, &mut grads)?;
        }
        Ok((loss * scale, grads))
    }
}
