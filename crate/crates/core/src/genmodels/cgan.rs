use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::vae::{check_unit_interval, finite_or_fail, training_failure};
use crate::error::{Error, Result};
use crate::nncore::{loss, minibatches, one_hot, ActivationKind, AdamState, LossKind, Matrix, Mode, Network};
use crate::rng::{seeded, standard_normal, Rng};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CganHistory {
    pub generator: Vec<f64>,
    pub discriminator: Vec<f64>,
}

/// Conditional GAN: generator `(noise ⊕ one-hot) → features`, discriminator
/// `(features ⊕ one-hot) → P(real)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CganModel {
    pub generator: Network,
    pub discriminator: Network,
    pub noise_dim: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub config: TrainConfig,
    pub history: CganHistory,
    /// Real/fake accuracy of the final discriminator on the training rows
    /// against an equally sized fresh generated batch.
    pub final_discriminator_accuracy: f64,
}

impl CganModel {
    pub fn new(feature_dim: usize, num_classes: usize, cfg: &TrainConfig) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidInput("CGAN needs at least one class".into()));
        }
        let mut rng = seeded(cfg.seed);
        let block = cfg.hidden_block();
        let generator = Network::mlp(
            cfg.noise_dim + num_classes,
            &cfg.generator_hidden,
            feature_dim,
            block,
            Some(ActivationKind::Sigmoid),
            &mut rng,
        )?;
        let discriminator = Network::mlp(
            feature_dim + num_classes,
            &cfg.discriminator_hidden,
            1,
            block,
            Some(ActivationKind::Sigmoid),
            &mut rng,
        )?;
        Ok(CganModel {
            generator,
            discriminator,
            noise_dim: cfg.noise_dim,
            num_classes,
            feature_dim,
            config: cfg.clone(),
            history: CganHistory::default(),
            final_discriminator_accuracy: f64::NAN,
        })
    }

    fn conditioned(&self, m: &Matrix, labels: &[usize]) -> Result<Matrix> {
        m.hstack(&one_hot(labels, self.num_classes)?)
    }

    /// One generated row per label.
    pub fn generate(&self, labels: &[usize], rng: &mut Rng) -> Result<Matrix> {
        if labels.is_empty() {
            return Ok(Matrix::zeros(0, self.feature_dim));
        }
        let z = standard_normal(labels.len(), self.noise_dim, rng);
        self.generator.infer(&self.conditioned(&z, labels)?)
    }

    /// `P(real | x, label)` per row, inference mode.
    pub fn discriminate(&self, x: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
        if x.cols() != self.feature_dim || x.rows() != labels.len() {
            return Err(Error::shape(
                "CGAN discriminator input",
                format!("{} rows x {} features", labels.len(), self.feature_dim),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        Ok(self.discriminator.infer(&self.conditioned(x, labels)?)?.into_data())
    }

    /// One discriminator update on a real and a fake batch sharing `labels`.
    ///
    /// Both halves go through a single stacked forward pass so train-mode
    /// batch statistics describe the real/fake mixture the discriminator is
    /// later asked to judge. Returns the mean BCE over the stacked batch.
    pub fn discriminator_update(
        &mut self,
        real: &Matrix,
        fake: &Matrix,
        labels: &[usize],
        adam: &mut AdamState,
        rng: &mut Rng,
    ) -> Result<f64> {
        let n = labels.len();
        let input = self.conditioned(real, labels)?.vstack(&self.conditioned(fake, labels)?)?;
        let mut target = Matrix::filled(2 * n, 1, 1.0);
        target.data_mut()[n..].iter_mut().for_each(|t| *t = 0.0);
        let p = self.discriminator.forward(&input, Mode::Train, rng)?;
        let (l, g) = loss(&p, &target, LossKind::BinaryCrossEntropy)?;
        let (grads, _) = self.discriminator.backward(&g)?;
        self.discriminator.apply_adam(&grads, adam)?;
        Ok(l)
    }

    /// One non-saturating generator update (`−log D(G(z, y), y)`).
    ///
    /// The discriminator sees the fakes stacked under `real` (as in its own
    /// update) but only the fake half contributes to the loss.
    pub fn generator_update(
        &mut self,
        real: &Matrix,
        labels: &[usize],
        adam: &mut AdamState,
        rng: &mut Rng,
    ) -> Result<f64> {
        let n = labels.len();
        let z = standard_normal(n, self.noise_dim, rng);
        let fake = self.generator.forward(&self.conditioned(&z, labels)?, Mode::Train, rng)?;
        let input = self.conditioned(real, labels)?.vstack(&self.conditioned(&fake, labels)?)?;
        let p = self.discriminator.forward(&input, Mode::Train, rng)?;
        let fake_rows: Vec<usize> = (n..2 * n).collect();
        let (l, g) = loss(&p.select_rows(&fake_rows), &Matrix::filled(n, 1, 1.0), LossKind::BinaryCrossEntropy)?;
        let (_, d_input) = self.discriminator.backward(&Matrix::zeros(n, 1).vstack(&g)?)?;
        let d_fake = d_input.select_rows(&fake_rows).column_range(0, self.feature_dim);
        let (grads, _) = self.generator.backward(&d_fake)?;
        self.generator.apply_adam(&grads, adam)?;
        Ok(l)
    }

    fn sample_train_mode(&mut self, labels: &[usize], rng: &mut Rng) -> Result<Matrix> {
        let z = standard_normal(labels.len(), self.noise_dim, rng);
        let input = self.conditioned(&z, labels)?;
        self.generator.forward(&input, Mode::Train, rng)
    }

    /// Accuracy of the discriminator at telling `real` from a fresh generated
    /// batch with the same labels (threshold 0.5).
    pub fn real_fake_accuracy(&self, real: &Matrix, labels: &[usize], rng: &mut Rng) -> Result<f64> {
        let fake = self.generate(labels, rng)?;
        let pr = self.discriminate(real, labels)?;
        let pf = self.discriminate(&fake, labels)?;
        let correct = pr.iter().filter(|&&p| p > 0.5).count() + pf.iter().filter(|&&p| p < 0.5).count();
        Ok(correct as f64 / (pr.len() + pf.len()) as f64)
    }
}

/// Trains a conditional GAN with alternating discriminator/generator Adam
/// updates on each mini-batch.
pub fn train_cgan(x: &Matrix, y: &[usize], num_classes: usize, cfg: &TrainConfig) -> Result<CganModel> {
    let rows = x.rows();
    if rows != y.len() {
        return Err(Error::shape("train_cgan labels", rows, y.len()));
    }
    if rows < 2 {
        return Err(Error::InvalidInput("CGAN training needs at least 2 samples".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!("class id {bad} outside [0, {num_classes})")));
    }
    check_unit_interval(x, "CGAN training")?;
    let cfg = cfg.resolve(rows)?;
    let epochs = cfg.epochs.unwrap_or_default();
    let batch_size = cfg.batch_size.unwrap_or_default();
    let mut model = CganModel::new(x.cols(), num_classes, &cfg)?;
    let mut rng = seeded(cfg.seed ^ 0x4347_414e);
    let mut d_adam = AdamState::new(cfg.discriminator_learning_rate);
    let mut g_adam = AdamState::new(cfg.learning_rate);

    for epoch in 0..epochs {
        let (mut d_sum, mut g_sum) = (0.0, 0.0);
        let batches = minibatches(rows, batch_size, &mut rng);
        for batch in &batches {
            let real = x.select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (d, g) = (|| {
                let fake = model.sample_train_mode(&labels, &mut rng)?;
                let d = model.discriminator_update(&real, &fake, &labels, &mut d_adam, &mut rng)?;
                let g = model.generator_update(&real, &labels, &mut g_adam, &mut rng)?;
                Ok::<_, Error>((
                    finite_or_fail(d, epoch, "discriminator loss")?,
                    finite_or_fail(g, epoch, "generator loss")?,
                ))
            })()
            .map_err(|e| training_failure(epoch, e))?;
            d_sum += d;
            g_sum += g;
        }
        let n = batches.len() as f64;
        model.history.discriminator.push(d_sum / n);
        model.history.generator.push(g_sum / n);
    }
    model.generator.clear_cache();
    model.discriminator.clear_cache();
    model.final_discriminator_accuracy = model.real_fake_accuracy(x, y, &mut rng)?;
    Ok(model)
}
