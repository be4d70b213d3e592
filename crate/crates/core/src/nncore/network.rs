use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::layers::{
    ActivationKind, ActivationLayer, BatchNormLayer, DenseLayer, DropoutLayer, Layer, Mode,
};
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Partial derivatives for every parameter block of a network, in the order
/// given by [`Network::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradient {
    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &Gradient) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::shape("Gradient::accumulate", self.blocks.len(), other.blocks.len()));
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            if a.len() != b.len() {
                return Err(Error::shape("Gradient::accumulate block", a.len(), b.len()));
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Hidden-block recipe: dense → [batch-norm] → leaky-ReLU → [dropout].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenBlock {
    pub batch_norm: bool,
    pub leaky_alpha: f64,
    pub dropout: f64,
}

/// A fixed stack of layers with a cached forward pass and an exact backward
/// pass through that stack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Network { layers }
    }

    /// Multilayer perceptron `input → hidden… → output` with the given
    /// hidden-block recipe and an optional output activation.
    pub fn mlp(
        input: usize,
        hidden: &[usize],
        output: usize,
        block: HiddenBlock,
        output_activation: Option<ActivationKind>,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input == 0 || output == 0 || hidden.contains(&0) {
            return Err(Error::InvalidHyperparameter("layer widths must be positive".into()));
        }
        let mut layers = Vec::new();
        let mut width = input;
        for &h in hidden {
            layers.push(Layer::Dense(DenseLayer::glorot(width, h, rng)));
            if block.batch_norm {
                layers.push(Layer::BatchNorm(BatchNormLayer::new(h)));
            }
            layers.push(Layer::Activation(ActivationLayer::new(ActivationKind::LeakyRelu {
                alpha: block.leaky_alpha,
            })));
            if block.dropout > 0.0 {
                layers.push(Layer::Dropout(DropoutLayer::new(block.dropout)?));
            }
            width = h;
        }
        layers.push(Layer::Dense(DenseLayer::glorot(width, output, rng)));
        if let Some(kind) = output_activation {
            layers.push(Layer::Activation(ActivationLayer::new(kind)));
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l {
            Layer::Dense(d) => Some(d.input_dim()),
            _ => None,
        })
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(|l| match l {
            Layer::Dense(d) => Some(d.output_dim()),
            _ => None,
        })
    }

    /// The last dense layer, e.g. to zero-initialise an output head.
    pub fn last_dense_mut(&mut self) -> Option<&mut DenseLayer> {
        self.layers.iter_mut().rev().find_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn forward(&mut self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h, mode, rng)?;
        }
        if !h.is_finite() {
            return Err(Error::TrainingFailure {
                epoch: 0,
                reason: "non-finite activations in forward pass".into(),
            });
        }
        Ok(h)
    }

    /// Inference-mode forward pass; leaves caches untouched so a trained
    /// network can be shared read-only.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Gradients of every parameter and of the network input, given the
    /// loss gradient with respect to the output of the last `forward`.
    pub fn backward(&self, output_grad: &Matrix) -> Result<(Gradient, Matrix)> {
        let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());
        let mut g = output_grad.clone();
        for layer in self.layers.iter().rev() {
            let (grads, input_grad) = layer.backward(&g)?;
            per_layer.push(grads);
            g = input_grad;
        }
        per_layer.reverse();
        let gradient = Gradient {
            blocks: per_layer.into_iter().flatten().collect(),
        };
        Ok((gradient, g))
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.parameters_mut()).collect()
    }

    /// Human-readable names of the parameter blocks, e.g. `layer 0 (dense) weights`.
    pub fn parameter_names(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.parameter_block_names()
                    .iter()
                    .map(move |b| format!("layer {i} ({}) {b}", l.name()))
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_gradient(&self) -> Gradient {
        Gradient {
            blocks: self.parameters().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// Applies one Adam step; divergence errors name the offending block.
    pub fn apply_adam(&mut self, grads: &Gradient, state: &mut AdamState) -> Result<()> {
        let names = self.parameter_names();
        let mut params = self.parameters_mut();
        adam_step(&mut params, grads, state).map_err(|e| match e {
            Error::Divergence { block, .. } => Error::Divergence {
                block,
                name: names.get(block).cloned().unwrap_or_default(),
            },
            other => other,
        })
    }

    pub fn clear_cache(&mut self) {
        for l in &mut self.layers {
            l.clear_cache();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::loss::{loss, LossKind};
    use crate::rng::seeded;

    fn block() -> HiddenBlock {
        HiddenBlock {
            batch_norm: true,
            leaky_alpha: 0.2,
            dropout: 0.3,
        }
    }

    #[test]
    fn mlp_shapes_and_names() {
        let mut rng = seeded(1);
        let net = Network::mlp(5, &[4, 3], 2, block(), Some(ActivationKind::Softmax), &mut rng).unwrap();
        assert_eq!(net.input_dim(), Some(5));
        assert_eq!(net.output_dim(), Some(2));
        let names = net.parameter_names();
        assert_eq!(names.len(), net.parameters().len());
        assert_eq!(names[0], "layer 0 (dense) weights");
        assert_eq!(net.parameter_count(), 5 * 4 + 4 + 4 + 4 + 4 * 3 + 3 + 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn zero_loss_gradient_gives_zero_parameter_gradients() {
        let mut rng = seeded(2);
        let mut net = Network::mlp(3, &[4], 2, block(), Some(ActivationKind::Sigmoid), &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [0.5, -0.1, 0.0], [1.0, 1.0, -1.0]]).unwrap();
        let y = net.forward(&x, Mode::Train, &mut rng).unwrap();
        let (g, gin) = net.backward(&Matrix::zeros(y.rows(), y.cols())).unwrap();
        assert!(g.blocks.iter().flatten().all(|&v| v == 0.0));
        assert!(gin.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_before_forward_errors() {
        let mut rng = seeded(3);
        let net = Network::mlp(2, &[2], 1, block(), None, &mut rng).unwrap();
        assert!(matches!(net.backward(&Matrix::zeros(1, 1)), Err(Error::State(_))));
    }

    #[test]
    fn infer_matches_forward_in_infer_mode() {
        let mut rng = seeded(4);
        let mut net = Network::mlp(3, &[6, 4], 2, block(), Some(ActivationKind::Softmax), &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [0.5, -0.1, 0.0]]).unwrap();
        let a = net.forward(&x, Mode::Infer, &mut rng).unwrap();
        let b = net.infer(&x).unwrap();
        assert_eq!(a, b);
        for r in 0..b.rows() {
            assert!((b.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_names_the_block() {
        let mut rng = seeded(5);
        let mut net = Network::mlp(2, &[2], 1, block(), None, &mut rng).unwrap();
        let mut g = net.zero_gradient();
        g.blocks[2][0] = f64::INFINITY;
        let err = net.apply_adam(&g, &mut AdamState::new(0.01)).unwrap_err();
        match err {
            Error::Divergence { block, name } => {
                assert_eq!(block, 2);
                assert_eq!(name, "layer 1 (batch_norm) gamma");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn training_reduces_loss() {
        let mut rng = seeded(6);
        let mut net = Network::mlp(2, &[8], 1, HiddenBlock { batch_norm: false, leaky_alpha: 0.2, dropout: 0.0 }, Some(ActivationKind::Sigmoid), &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.0], [1.0], [1.0], [0.0]]).unwrap();
        let mut adam = AdamState::new(0.05);
        let first = loss(&net.infer(&x).unwrap(), &t, LossKind::BinaryCrossEntropy).unwrap().0;
        for _ in 0..1000 {
            let y = net.forward(&x, Mode::Train, &mut rng).unwrap();
            let (_, g) = loss(&y, &t, LossKind::BinaryCrossEntropy).unwrap();
            let (grads, _) = net.backward(&g).unwrap();
            net.apply_adam(&grads, &mut adam).unwrap();
        }
        let last = loss(&net.infer(&x).unwrap(), &t, LossKind::BinaryCrossEntropy).unwrap().0;
        assert!(last < 0.1 * first, "xor loss {first} -> {last}");
    }
}
