use serde::{Deserialize, Serialize};

use super::config::{ReconstructionLoss, TrainConfig};
use crate::error::{Error, Result};
use crate::nncore::{loss, minibatches, ActivationKind, AdamState, Gradient, LossKind, Matrix, Mode, Network};
use crate::rng::{seeded, standard_normal, Rng};

/// `−½ Σ (1 + log σ² − μ² − σ²)`, the KL divergence of `N(μ, σ²)` from the
/// standard normal prior.
pub fn kl_divergence(mu: &[f64], log_var: &[f64]) -> f64 {
    let kl: f64 = mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum::<f64>()
        * -0.5;
    kl.max(0.0)
}

/// Encoder `F → … → (μ, log σ²)` and decoder `L → … → F` (sigmoid output).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaeNetworks {
    pub encoder: Network,
    pub decoder: Network,
    pub latent_dim: usize,
    pub feature_dim: usize,
}

/// Everything one forward pass produces and its backward pass consumes.
pub struct VaeForward {
    pub mu: Matrix,
    pub log_var: Matrix,
    pub noise: Matrix,
    pub reconstruction: Matrix,
    pub reconstruction_loss: f64,
    pub kl: f64,
    reconstruction_grad: Matrix,
}

impl VaeForward {
    pub fn total_loss(&self, kl_weight: f64) -> f64 {
        self.reconstruction_loss + kl_weight * self.kl
    }
}

pub struct VaeGradients {
    pub encoder: Gradient,
    pub decoder: Gradient,
}

impl VaeNetworks {
    pub fn new(feature_dim: usize, cfg: &TrainConfig, rng: &mut Rng) -> Result<Self> {
        let block = cfg.hidden_block();
        let encoder = Network::mlp(feature_dim, &cfg.encoder_hidden, 2 * cfg.latent_dim, block, None, rng)?;
        let decoder = Network::mlp(
            cfg.latent_dim,
            &cfg.decoder_hidden,
            feature_dim,
            block,
            Some(ActivationKind::Sigmoid),
            rng,
        )?;
        Ok(VaeNetworks {
            encoder,
            decoder,
            latent_dim: cfg.latent_dim,
            feature_dim,
        })
    }

    fn split(&self, enc: &Matrix) -> (Matrix, Matrix) {
        let l = self.latent_dim;
        (enc.column_range(0, l), enc.column_range(l, 2 * l))
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.feature_dim {
            return Err(Error::shape("VAE input", self.feature_dim, x.cols()));
        }
        Ok(())
    }

    /// Encoder mean and log-variance in inference mode.
    pub fn encode(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        self.check_input(x)?;
        let enc = self.encoder.infer(x)?;
        Ok(self.split(&enc))
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.latent_dim {
            return Err(Error::shape("VAE latent", self.latent_dim, z.cols()));
        }
        self.decoder.infer(z)
    }

    /// `Dec(μ(x))`: deterministic reconstruction.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let (mu, _) = self.encode(x)?;
        self.decode(&mu)
    }

    /// `Dec(μ + σ·ε)` with fresh `ε ~ N(0, I)`.
    pub fn reconstruct_sampled(&self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        let (mu, log_var) = self.encode(x)?;
        let eps = standard_normal(x.rows(), self.latent_dim, rng);
        self.decode(&reparameterize(&mu, &log_var, &eps)?)
    }

    /// Forward pass with caller-supplied noise `ε`, so the reparameterized
    /// path is a deterministic function of parameters and `ε`.
    pub fn forward(
        &mut self,
        x: &Matrix,
        noise: &Matrix,
        recon_kind: ReconstructionLoss,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<VaeForward> {
        self.check_input(x)?;
        let enc = self.encoder.forward(x, mode, rng)?;
        let (mu, log_var) = self.split(&enc);
        let z = reparameterize(&mu, &log_var, noise)?;
        let reconstruction = self.decoder.forward(&z, mode, rng)?;
        let kind = match recon_kind {
            ReconstructionLoss::BinaryCrossEntropy => LossKind::BinaryCrossEntropy,
            ReconstructionLoss::MeanSquaredError => LossKind::MeanSquaredError,
        };
        // summed over features, averaged over rows
        let (mean_loss, mut grad) = loss(&reconstruction, x, kind)?;
        let f = self.feature_dim as f64;
        grad.scale(f);
        let batch = x.rows() as f64;
        let kl = (0..x.rows())
            .map(|r| kl_divergence(mu.row(r), log_var.row(r)))
            .sum::<f64>()
            / batch;
        Ok(VaeForward {
            mu,
            log_var,
            noise: noise.clone(),
            reconstruction,
            reconstruction_loss: mean_loss * f,
            kl,
            reconstruction_grad: grad,
        })
    }

    /// Backward pass of `recon + kl_weight·KL` plus an optional extra
    /// gradient on the reconstruction (the VAE-SGAN adversarial term).
    pub fn backward(
        &self,
        fwd: &VaeForward,
        kl_weight: f64,
        extra_reconstruction_grad: Option<&Matrix>,
    ) -> Result<VaeGradients> {
        let mut d_recon = fwd.reconstruction_grad.clone();
        if let Some(extra) = extra_reconstruction_grad {
            d_recon.add_assign(extra)?;
        }
        let (decoder, dz) = self.decoder.backward(&d_recon)?;
        let batch = fwd.mu.rows() as f64;
        let l = self.latent_dim;
        let mut d_enc = Matrix::zeros(fwd.mu.rows(), 2 * l);
        for r in 0..fwd.mu.rows() {
            for j in 0..l {
                let mu = fwd.mu.get(r, j);
                let lv = fwd.log_var.get(r, j);
                let g = dz.get(r, j);
                let sigma = (0.5 * lv).exp();
                d_enc.set(r, j, g + kl_weight * mu / batch);
                d_enc.set(
                    r,
                    l + j,
                    g * fwd.noise.get(r, j) * 0.5 * sigma + kl_weight * 0.5 * (lv.exp() - 1.0) / batch,
                );
            }
        }
        let (encoder, _) = self.encoder.backward(&d_enc)?;
        Ok(VaeGradients { encoder, decoder })
    }
}

/// `z = μ + exp(½·log σ²)·ε`.
pub fn reparameterize(mu: &Matrix, log_var: &Matrix, noise: &Matrix) -> Result<Matrix> {
    mu.expect_same_shape(log_var, "reparameterize")?;
    mu.expect_same_shape(noise, "reparameterize")?;
    let mut z = mu.clone();
    for ((zv, lv), e) in z.data_mut().iter_mut().zip(log_var.data()).zip(noise.data()) {
        *zv += (0.5 * lv).exp() * e;
    }
    Ok(z)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VaeHistory {
    pub total: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub kl: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaeModel {
    pub networks: VaeNetworks,
    pub config: TrainConfig,
    pub history: VaeHistory,
}

impl VaeModel {
    /// Freshly initialised, untrained model.
    pub fn new(feature_dim: usize, cfg: &TrainConfig) -> Result<Self> {
        let mut rng = seeded(cfg.seed);
        Ok(VaeModel {
            networks: VaeNetworks::new(feature_dim, cfg, &mut rng)?,
            config: cfg.clone(),
            history: VaeHistory::default(),
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.networks.feature_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.networks.latent_dim
    }

    pub fn encode(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        self.networks.encode(x)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        self.networks.decode(z)
    }

    /// Deterministic `Dec(Enc_mean(x))`.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.networks.reconstruct(x)
    }

    pub fn reconstruct_sampled(&self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        self.networks.reconstruct_sampled(x, rng)
    }
}

pub(crate) fn check_unit_interval(x: &Matrix, what: &str) -> Result<()> {
    if x.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput(format!(
            "{what} expects features normalized to [0, 1]"
        )));
    }
    Ok(())
}

pub(crate) fn training_failure(epoch: usize, e: Error) -> Error {
    match e {
        Error::TrainingFailure { reason, .. } => Error::TrainingFailure { epoch, reason },
        Error::Divergence { block, name } => Error::TrainingFailure {
            epoch,
            reason: format!("non-finite gradient in block {block} ({name})"),
        },
        other => other,
    }
}

pub(crate) fn finite_or_fail(value: f64, epoch: usize, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::TrainingFailure {
            epoch,
            reason: format!("{what} is not finite"),
        })
    }
}

/// Trains a VAE on the rows of `x` (features in `[0, 1]`).
pub fn train_vae(x: &Matrix, cfg: &TrainConfig) -> Result<VaeModel> {
    let rows = x.rows();
    if rows < 2 {
        return Err(Error::InvalidInput("VAE training needs at least 2 samples".into()));
    }
    if cfg.reconstruction_loss == ReconstructionLoss::BinaryCrossEntropy {
        check_unit_interval(x, "VAE training with cross-entropy reconstruction")?;
    }
    let cfg = cfg.resolve(rows)?;
    let epochs = cfg.epochs.unwrap_or_default();
    let batch_size = cfg.batch_size.unwrap_or_default();
    let mut model = VaeModel::new(x.cols(), &cfg)?;
    let mut rng = seeded(cfg.seed ^ 0x5641_4520);
    let mut enc_adam = AdamState::new(cfg.learning_rate);
    let mut dec_adam = AdamState::new(cfg.learning_rate);

    for epoch in 0..epochs {
        let mut sums = [0.0; 3];
        let batches = minibatches(rows, batch_size, &mut rng);
        for batch in &batches {
            let xb = x.select_rows(batch);
            let eps = standard_normal(xb.rows(), cfg.latent_dim, &mut rng);
            let nets = &mut model.networks;
            let step = (|| {
                let fwd = nets.forward(&xb, &eps, cfg.reconstruction_loss, Mode::Train, &mut rng)?;
                let total = finite_or_fail(fwd.total_loss(cfg.kl_weight), epoch, "VAE loss")?;
                let grads = nets.backward(&fwd, cfg.kl_weight, None)?;
                nets.encoder.apply_adam(&grads.encoder, &mut enc_adam)?;
                nets.decoder.apply_adam(&grads.decoder, &mut dec_adam)?;
                Ok::<_, Error>([total, fwd.reconstruction_loss, fwd.kl])
            })()
            .map_err(|e| training_failure(epoch, e))?;
            for (s, v) in sums.iter_mut().zip(step) {
                *s += v;
            }
        }
        let n = batches.len() as f64;
        model.history.total.push(sums[0] / n);
        model.history.reconstruction.push(sums[1] / n);
        model.history.kl.push(sums[2] / n);
    }
    model.networks.encoder.clear_cache();
    model.networks.decoder.clear_cache();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((kl_divergence(&[1.0], &[0.0]) - 0.5).abs() < 1e-15);
        let expect = 0.5 * (4.0 - 1.0 - 4f64.ln());
        assert!((kl_divergence(&[0.0], &[4f64.ln()]) - expect).abs() < 1e-12);
        assert!((expect - 0.8069).abs() < 1e-4);
    }

    #[test]
    fn zero_output_layer_reconstructs_one_half() {
        let cfg = TrainConfig::default();
        let mut model = VaeModel::new(5, &cfg).unwrap();
        let last = model.networks.decoder.last_dense_mut().unwrap();
        last.weights = Matrix::zeros(last.input_dim(), last.output_dim());
        last.bias.iter_mut().for_each(|b| *b = 0.0);
        let x = Matrix::filled(3, 5, 0.3);
        let r = model.reconstruct(&x).unwrap();
        assert_eq!(r.shape(), (3, 5));
        assert!(r.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let model = VaeModel::new(4, &TrainConfig::default()).unwrap();
        assert!(matches!(model.reconstruct(&Matrix::zeros(2, 3)), Err(Error::Shape { .. })));
    }

    #[test]
    fn bce_requires_unit_interval() {
        let x = Matrix::filled(4, 2, 2.0);
        assert!(matches!(train_vae(&x, &TrainConfig::default()), Err(Error::InvalidInput(_))));
        let one = Matrix::filled(1, 2, 0.5);
        assert!(train_vae(&one, &TrainConfig::default()).is_err());
    }
}
