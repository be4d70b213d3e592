use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::HiddenBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionLoss {
    #[default]
    BinaryCrossEntropy,
    MeanSquaredError,
}

/// Hyperparameters shared by the three generative models.
///
/// `epochs` and `batch_size` may be left unset; [`TrainConfig::resolve`]
/// then picks 200 epochs (400 for sets of at most 100 rows) and batches of
/// 32 (the full set below 64 rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    /// CGAN and VAE-SGAN discriminator learning rate.
    pub discriminator_learning_rate: f64,
    pub latent_dim: usize,
    pub noise_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub dropout: f64,
    pub leaky_alpha: f64,
    pub batch_norm: bool,
    pub reconstruction_loss: ReconstructionLoss,
    pub kl_weight: f64,
    /// Weight of the VAE-SGAN class-adversarial term in the decoder loss.
    pub adversarial_weight: f64,
    /// Sample `z` instead of using the encoder mean when reconstructing.
    pub stochastic_reconstruction: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: None,
            batch_size: None,
            learning_rate: 1e-3,
            discriminator_learning_rate: 5e-4,
            latent_dim: 16,
            noise_dim: 32,
            encoder_hidden: vec![128, 64],
            decoder_hidden: vec![64, 128],
            generator_hidden: vec![128, 128],
            discriminator_hidden: vec![128, 64],
            dropout: 0.3,
            leaky_alpha: 0.2,
            batch_norm: true,
            reconstruction_loss: ReconstructionLoss::BinaryCrossEntropy,
            kl_weight: 1.0,
            adversarial_weight: 0.1,
            stochastic_reconstruction: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn epochs_for(&self, rows: usize) -> usize {
        self.epochs.unwrap_or(if rows <= 100 { 400 } else { 200 })
    }

    pub fn batch_size_for(&self, rows: usize) -> usize {
        self.batch_size.unwrap_or(if rows < 64 { rows } else { 32 })
    }

    /// Concrete copy with `epochs`/`batch_size` filled in for a train set
    /// of `rows` samples, validated.
    pub fn resolve(&self, rows: usize) -> Result<TrainConfig> {
        let resolved = TrainConfig {
            epochs: Some(self.epochs_for(rows)),
            batch_size: Some(self.batch_size_for(rows)),
            ..self.clone()
        };
        resolved.validate(rows)?;
        Ok(resolved)
    }

    pub fn validate(&self, rows: usize) -> Result<()> {
        let epochs = self.epochs_for(rows);
        let batch = self.batch_size_for(rows);
        if epochs == 0 || batch == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if batch > rows {
            return Err(Error::Config(format!(
                "batch_size {batch} exceeds the {rows} training rows"
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.discriminator_learning_rate > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.latent_dim == 0 || self.noise_dim == 0 {
            return Err(Error::Config("latent_dim and noise_dim must be positive".into()));
        }
        let widths = [
            &self.encoder_hidden,
            &self.decoder_hidden,
            &self.generator_hidden,
            &self.discriminator_hidden,
        ];
        if widths.iter().any(|w| w.contains(&0)) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.kl_weight < 0.0 || self.adversarial_weight < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }

    pub(crate) fn hidden_block(&self) -> HiddenBlock {
        HiddenBlock {
            batch_norm: self.batch_norm,
            leaky_alpha: self.leaky_alpha,
            dropout: self.dropout,
        }
    }
}
