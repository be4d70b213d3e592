use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Batch-norm running-stat momentum: `running = m·running + (1−m)·batch`.
pub const BATCHNORM_MOMENTUM: f64 = 0.9;
pub const BATCHNORM_EPSILON: f64 = 1e-5;
pub const LEAKY_RELU_ALPHA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Fully connected layer with `[in × out]` weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    #[serde(skip)]
    input: Option<Matrix>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::shape("DenseLayer::new", weights.cols(), bias.len()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            input: None,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(input: usize, output: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(input, output, data).expect("sized by construction"),
            bias: vec![0.0; output],
            input: None,
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(input, output),
            bias: vec![0.0; output],
            input: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// `out[b][o] = Σ_i x[b][i]·W[i][o] + bias[o]`.
pub fn dense_forward(x: &Matrix, layer: &DenseLayer) -> Result<Matrix> {
    if x.cols() != layer.input_dim() {
        return Err(Error::shape("dense_forward", layer.input_dim(), x.cols()));
    }
    let mut out = x.matmul(&layer.weights)?;
    for r in 0..out.rows() {
        for (v, b) in out.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    LeakyRelu { alpha: f64 },
    Sigmoid,
    Softmax,
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn activation_forward(x: &Matrix, kind: ActivationKind) -> Matrix {
    match kind {
        ActivationKind::LeakyRelu { alpha } => x.map(|v| if v >= 0.0 { v } else { alpha * v }),
        ActivationKind::Sigmoid => x.map(sigmoid),
        ActivationKind::Softmax => {
            let mut out = x.clone();
            for r in 0..out.rows() {
                let row = out.row_mut(r);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationLayer {
    pub kind: ActivationKind,
    #[serde(skip)]
    cache: Option<Matrix>,
}

impl ActivationLayer {
    pub fn new(kind: ActivationKind) -> Self {
        ActivationLayer { kind, cache: None }
    }
}

/// Batch normalization parameters and running statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNormState {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormState {
    pub fn new(features: usize) -> Self {
        BatchNormState {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum: BATCHNORM_MOMENTUM,
            epsilon: BATCHNORM_EPSILON,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }
}

struct BatchNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
    mode: Mode,
}

/// Train mode normalizes with the batch mean and population variance and
/// folds them into the running statistics; infer mode uses the running
/// statistics only.
pub fn batchnorm_forward(x: &Matrix, state: &mut BatchNormState, mode: Mode) -> Result<Matrix> {
    batchnorm_forward_cached(x, state, mode).map(|(out, _)| out)
}

fn batchnorm_forward_cached(
    x: &Matrix,
    state: &mut BatchNormState,
    mode: Mode,
) -> Result<(Matrix, BatchNormCache)> {
    let features = state.features();
    if x.cols() != features {
        return Err(Error::shape("batchnorm_forward", features, x.cols()));
    }
    let (mean, var) = match mode {
        Mode::Train => {
            let n = x.rows();
            if n < 2 {
                return Err(Error::DegenerateBatch(format!(
                    "batch normalization needs at least 2 rows in train mode, got {n}"
                )));
            }
            let mean: Vec<f64> = x.column_sums().iter().map(|s| s / n as f64).collect();
            let mut var = vec![0.0; features];
            for row in x.row_iter() {
                for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                    *v += (x - m) * (x - m);
                }
            }
            for v in &mut var {
                *v /= n as f64;
            }
            let m = state.momentum;
            for j in 0..features {
                state.running_mean[j] = m * state.running_mean[j] + (1.0 - m) * mean[j];
                state.running_var[j] = m * state.running_var[j] + (1.0 - m) * var[j];
            }
            (mean, var)
        }
        Mode::Infer => (state.running_mean.clone(), state.running_var.clone()),
    };
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| 1.0 / (v.max(0.0) + state.epsilon).sqrt())
        .collect();
    let mut normalized = x.clone();
    let mut out = x.clone();
    for r in 0..x.rows() {
        let nrow = normalized.row_mut(r);
        for j in 0..features {
            nrow[j] = (nrow[j] - mean[j]) * inv_std[j];
        }
        let orow = out.row_mut(r);
        for j in 0..features {
            orow[j] = state.gamma[j] * nrow[j] + state.beta[j];
        }
    }
    Ok((
        out,
        BatchNormCache {
            normalized,
            inv_std,
            mode,
        },
    ))
}

fn batchnorm_infer(x: &Matrix, state: &BatchNormState) -> Result<Matrix> {
    let features = state.features();
    if x.cols() != features {
        return Err(Error::shape("batchnorm_forward", features, x.cols()));
    }
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for j in 0..features {
            let inv = 1.0 / (state.running_var[j].max(0.0) + state.epsilon).sqrt();
            let normalized = (row[j] - state.running_mean[j]) * inv;
            row[j] = state.gamma[j] * normalized + state.beta[j];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNormLayer {
    pub state: BatchNormState,
    #[serde(skip)]
    cache: Option<BatchNormCacheBox>,
}

// Keeps `BatchNormLayer: Clone + Debug` without exposing the cache type.
#[derive(Clone)]
struct BatchNormCacheBox(std::sync::Arc<BatchNormCache>);

impl std::fmt::Debug for BatchNormCacheBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BatchNormCache")
    }
}

impl BatchNormLayer {
    pub fn new(features: usize) -> Self {
        BatchNormLayer {
            state: BatchNormState::new(features),
            cache: None,
        }
    }
}

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by `1/(1−rate)`; infer mode is identity.
pub fn dropout_forward(x: &Matrix, rate: f64, mode: Mode, rng: &mut Rng) -> Result<Matrix> {
    dropout_mask(x.rows(), x.cols(), rate, mode, rng).map(|mask| match mask {
        Some(mask) => x.zip_map(&mask, |a, m| a * m).expect("same shape"),
        None => x.clone(),
    })
}

fn validate_dropout_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidHyperparameter(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

fn dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<Option<Matrix>> {
    validate_dropout_rate(rate)?;
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(None);
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let data = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
        .collect();
    Ok(Some(Matrix::from_vec(rows, cols, data)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropoutLayer {
    pub rate: f64,
    #[serde(skip)]
    mask: Option<Option<Matrix>>,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        validate_dropout_rate(rate)?;
        Ok(DropoutLayer { rate, mask: None })
    }
}

/// One element of a sequential stack.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Activation(ActivationLayer),
    Dropout(DropoutLayer),
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::BatchNorm(_) => "batch_norm",
            Layer::Activation(_) => "activation",
            Layer::Dropout(_) => "dropout",
        }
    }

    /// Names of this layer's parameter blocks, in gradient order.
    pub fn parameter_block_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Dense(_) => &["weights", "bias"],
            Layer::BatchNorm(_) => &["gamma", "beta"],
            _ => &[],
        }
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => vec![d.weights.data(), &d.bias],
            Layer::BatchNorm(b) => vec![&b.state.gamma, &b.state.beta],
            _ => Vec::new(),
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Dense(d) => vec![d.weights.data_mut(), &mut d.bias],
            Layer::BatchNorm(b) => vec![&mut b.state.gamma, &mut b.state.beta],
            _ => Vec::new(),
        }
    }

    /// Forward pass that retains what `backward` needs.
    pub fn forward(&mut self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => {
                let out = dense_forward(x, d)?;
                d.input = Some(x.clone());
                Ok(out)
            }
            Layer::BatchNorm(b) => {
                let (out, cache) = batchnorm_forward_cached(x, &mut b.state, mode)?;
                b.cache = Some(BatchNormCacheBox(std::sync::Arc::new(cache)));
                Ok(out)
            }
            Layer::Activation(a) => {
                let out = activation_forward(x, a.kind);
                a.cache = Some(match a.kind {
                    ActivationKind::LeakyRelu { .. } => x.clone(),
                    _ => out.clone(),
                });
                Ok(out)
            }
            Layer::Dropout(d) => {
                let mask = dropout_mask(x.rows(), x.cols(), d.rate, mode, rng)?;
                let out = match &mask {
                    Some(m) => x.zip_map(m, |a, m| a * m)?,
                    None => x.clone(),
                };
                d.mask = Some(mask);
                Ok(out)
            }
        }
    }

    /// Inference-mode forward pass without touching any cache.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => dense_forward(x, d),
            Layer::BatchNorm(b) => batchnorm_infer(x, &b.state),
            Layer::Activation(a) => Ok(activation_forward(x, a.kind)),
            Layer::Dropout(_) => Ok(x.clone()),
        }
    }

    /// Returns the parameter gradients of this layer and the gradient with
    /// respect to its input.
    pub fn backward(&self, grad: &Matrix) -> Result<(Vec<Vec<f64>>, Matrix)> {
        let missing = || Error::State(format!("{} layer has no forward cache", self.name()));
        match self {
            Layer::Dense(d) => {
                let input = d.input.as_ref().ok_or_else(missing)?;
                grad.expect_same_shape(
                    &Matrix::zeros(input.rows(), d.output_dim()),
                    "dense backward",
                )?;
                let grad_w = input.t_matmul(grad)?;
                let grad_b = grad.column_sums();
                let grad_in = grad.matmul_t(&d.weights)?;
                Ok((vec![grad_w.into_data(), grad_b], grad_in))
            }
            Layer::BatchNorm(b) => {
                let cache = &b.cache.as_ref().ok_or_else(missing)?.0;
                grad.expect_same_shape(&cache.normalized, "batch-norm backward")?;
                let features = b.state.features();
                let n = grad.rows() as f64;
                let mut grad_gamma = vec![0.0; features];
                let grad_beta = grad.column_sums();
                for r in 0..grad.rows() {
                    for ((g, dy), xh) in grad_gamma
                        .iter_mut()
                        .zip(grad.row(r))
                        .zip(cache.normalized.row(r))
                    {
                        *g += dy * xh;
                    }
                }
                let mut grad_in = grad.clone();
                match cache.mode {
                    Mode::Train => {
                        // dx = inv_std/N · (N·dx̂ − Σdx̂ − x̂·Σ(dx̂·x̂)), dx̂ = dy·γ
                        let sum_dxhat: Vec<f64> =
                            (0..features).map(|j| grad_beta[j] * b.state.gamma[j]).collect();
                        let sum_dxhat_xhat: Vec<f64> =
                            (0..features).map(|j| grad_gamma[j] * b.state.gamma[j]).collect();
                        for r in 0..grad.rows() {
                            let xh = cache.normalized.row(r);
                            let row = grad_in.row_mut(r);
                            for j in 0..features {
                                let dxhat = row[j] * b.state.gamma[j];
                                row[j] = cache.inv_std[j] / n
                                    * (n * dxhat - sum_dxhat[j] - xh[j] * sum_dxhat_xhat[j]);
                            }
                        }
                    }
                    Mode::Infer => {
                        for r in 0..grad.rows() {
                            let row = grad_in.row_mut(r);
                            for j in 0..features {
                                row[j] *= b.state.gamma[j] * cache.inv_std[j];
                            }
                        }
                    }
                }
                Ok((vec![grad_gamma, grad_beta], grad_in))
            }
            Layer::Activation(a) => {
                let cache = a.cache.as_ref().ok_or_else(missing)?;
                let grad_in = match a.kind {
                    ActivationKind::LeakyRelu { alpha } => {
                        grad.zip_map(cache, |g, x| if x >= 0.0 { g } else { alpha * g })?
                    }
                    ActivationKind::Sigmoid => grad.zip_map(cache, |g, y| g * y * (1.0 - y))?,
                    ActivationKind::Softmax => {
                        grad.expect_same_shape(cache, "softmax backward")?;
                        let mut out = grad.clone();
                        for r in 0..grad.rows() {
                            let y = cache.row(r);
                            let dot: f64 = grad.row(r).iter().zip(y).map(|(g, y)| g * y).sum();
                            for (o, yv) in out.row_mut(r).iter_mut().zip(y) {
                                *o = yv * (*o - dot);
                            }
                        }
                        out
                    }
                };
                Ok((Vec::new(), grad_in))
            }
            Layer::Dropout(d) => {
                let mask = d.mask.as_ref().ok_or_else(missing)?;
                let grad_in = match mask {
                    Some(m) => grad.zip_map(m, |g, m| g * m)?,
                    None => grad.clone(),
                };
                Ok((Vec::new(), grad_in))
            }
        }
    }

    pub fn clear_cache(&mut self) {
        match self {
            Layer::Dense(d) => d.input = None,
            Layer::BatchNorm(b) => b.cache = None,
            Layer::Activation(a) => a.cache = None,
            Layer::Dropout(d) => d.mask = None,
        }
    }
}
