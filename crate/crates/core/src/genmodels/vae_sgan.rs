use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::vae::{check_unit_interval, finite_or_fail, training_failure, VaeNetworks};
use crate::error::{Error, Result};
use crate::nncore::{loss, minibatches, one_hot, ActivationKind, AdamState, LossKind, Matrix, Mode, Network};
use crate::rng::{seeded, standard_normal, Rng};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VaeSganHistory {
    /// Reconstruction + KL.
    pub vae: Vec<f64>,
    /// Cross-entropy of reconstructions against their source class.
    pub adversarial: Vec<f64>,
    pub discriminator: Vec<f64>,
}

/// VAE whose reconstructions are judged by a `K+1`-way discriminator
/// (`K` real classes plus class `K` for "fake").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaeSganModel {
    pub networks: VaeNetworks,
    pub discriminator: Network,
    pub num_classes: usize,
    pub config: TrainConfig,
    pub history: VaeSganHistory,
}

impl VaeSganModel {
    pub fn new(feature_dim: usize, num_classes: usize, cfg: &TrainConfig) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidInput("VAE-SGAN needs at least one class".into()));
        }
        let mut rng = seeded(cfg.seed);
        let networks = VaeNetworks::new(feature_dim, cfg, &mut rng)?;
        let discriminator = Network::mlp(
            feature_dim,
            &cfg.discriminator_hidden,
            num_classes + 1,
            cfg.hidden_block(),
            Some(ActivationKind::Softmax),
            &mut rng,
        )?;
        Ok(VaeSganModel {
            networks,
            discriminator,
            num_classes,
            config: cfg.clone(),
            history: VaeSganHistory::default(),
        })
    }

    pub fn fake_class(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.networks.feature_dim
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.networks.reconstruct(x)
    }

    pub fn reconstruct_sampled(&self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        self.networks.reconstruct_sampled(x, rng)
    }

    /// Discriminator distribution over `K+1` classes, one row per sample.
    pub fn discriminator_probabilities(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.feature_dim() {
            return Err(Error::shape("VAE-SGAN discriminator input", self.feature_dim(), x.cols()));
        }
        self.discriminator.infer(x)
    }

    /// Predicted real class: argmax over the first `K` outputs.
    pub fn classify(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.discriminator_probabilities(x)?;
        Ok(p.column_range(0, self.num_classes).argmax_rows())
    }
}

/// Trains the VAE with an extra decoder objective (reconstructions should be
/// classified as their source class) alternating with discriminator updates
/// (real rows → true class, reconstructions → fake class).
pub fn train_vae_sgan(x: &Matrix, y: &[usize], num_classes: usize, cfg: &TrainConfig) -> Result<VaeSganModel> {
    let rows = x.rows();
    if rows != y.len() {
        return Err(Error::shape("train_vae_sgan labels", rows, y.len()));
    }
    if rows < 2 {
        return Err(Error::InvalidInput("VAE-SGAN training needs at least 2 samples".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!("class id {bad} outside [0, {num_classes})")));
    }
    check_unit_interval(x, "VAE-SGAN training")?;
    let cfg = cfg.resolve(rows)?;
    let epochs = cfg.epochs.unwrap_or_default();
    let batch_size = cfg.batch_size.unwrap_or_default();
    let mut model = VaeSganModel::new(x.cols(), num_classes, &cfg)?;
    let mut rng = seeded(cfg.seed ^ 0x5347_414e);
    let mut enc_adam = AdamState::new(cfg.learning_rate);
    let mut dec_adam = AdamState::new(cfg.learning_rate);
    let mut d_adam = AdamState::new(cfg.discriminator_learning_rate);
    let lambda = cfg.adversarial_weight;
    let classes = num_classes + 1;

    for epoch in 0..epochs {
        let mut sums = [0.0; 3];
        let batches = minibatches(rows, batch_size, &mut rng);
        for batch in &batches {
            let xb = x.select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let n = labels.len();
            let step = (|| {
                let true_class = one_hot(&labels, classes)?;
                let fake_class = one_hot(&vec![num_classes; n], classes)?;

                // VAE + adversarial step
                let eps = standard_normal(n, cfg.latent_dim, &mut rng);
                let fwd = model.networks.forward(&xb, &eps, cfg.reconstruction_loss, Mode::Train, &mut rng)?;
                // reconstructions are judged stacked under the real rows; only they carry loss
                let p = model.discriminator.forward(&xb.vstack(&fwd.reconstruction)?, Mode::Train, &mut rng)?;
                let recon_rows: Vec<usize> = (n..2 * n).collect();
                let (adv, g_adv) = loss(&p.select_rows(&recon_rows), &true_class, LossKind::CategoricalCrossEntropy)?;
                let (_, d_input) = model.discriminator.backward(&Matrix::zeros(n, classes).vstack(&g_adv)?)?;
                let mut d_recon = d_input.select_rows(&recon_rows);
                d_recon.scale(lambda);
                let grads = model.networks.backward(&fwd, cfg.kl_weight, Some(&d_recon))?;
                model.networks.encoder.apply_adam(&grads.encoder, &mut enc_adam)?;
                model.networks.decoder.apply_adam(&grads.decoder, &mut dec_adam)?;

                // discriminator step on real rows stacked with the (detached) reconstructions
                let stacked = xb.vstack(&fwd.reconstruction)?;
                let targets = true_class.vstack(&fake_class)?;
                let p = model.discriminator.forward(&stacked, Mode::Train, &mut rng)?;
                let (l_disc, g_disc) = loss(&p, &targets, LossKind::CategoricalCrossEntropy)?;
                let (d_grads, _) = model.discriminator.backward(&g_disc)?;
                model.discriminator.apply_adam(&d_grads, &mut d_adam)?;

                Ok::<_, Error>([
                    finite_or_fail(fwd.total_loss(cfg.kl_weight), epoch, "VAE loss")?,
                    finite_or_fail(adv, epoch, "adversarial loss")?,
                    finite_or_fail(l_disc, epoch, "discriminator loss")?,
                ])
            })()
            .map_err(|e| training_failure(epoch, e))?;
            for (s, v) in sums.iter_mut().zip(step) {
                *s += v;
            }
        }
        let nb = batches.len() as f64;
        model.history.vae.push(sums[0] / nb);
        model.history.adversarial.push(sums[1] / nb);
        model.history.discriminator.push(sums[2] / nb);
    }
    model.networks.encoder.clear_cache();
    model.networks.decoder.clear_cache();
    model.discriminator.clear_cache();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminator_rows_are_distributions_with_fake_class() {
        let model = VaeSganModel::new(4, 3, &TrainConfig::default()).unwrap();
        assert_eq!(model.fake_class(), 3);
        let p = model.discriminator_probabilities(&Matrix::filled(5, 4, 0.2)).unwrap();
        assert_eq!(p.cols(), 4);
        for r in 0..p.rows() {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(model.classify(&Matrix::filled(2, 4, 0.1)).unwrap().iter().all(|&c| c < 3));
    }

    #[test]
    fn rejects_bad_labels() {
        let x = Matrix::filled(4, 2, 0.5);
        assert!(train_vae_sgan(&x, &[0, 1, 2, 0], 2, &TrainConfig::default()).is_err());
        assert!(train_vae_sgan(&x, &[0, 1], 2, &TrainConfig::default()).is_err());
    }
}
