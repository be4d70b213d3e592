use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::nncore::{loss, minibatches, one_hot, ActivationKind, AdamState, HiddenBlock, LossKind, Matrix, Mode, Network};
use crate::rng::{derive_seed, seeded};

/// Two-hidden-layer evaluator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub leaky_alpha: f64,
    pub batch_norm: bool,
    pub learning_rate: f64,
    /// Defaults to 32, or the whole pool when it has fewer than 64 rows.
    pub batch_size: Option<usize>,
    pub max_epochs: usize,
    /// Epochs without eval-loss improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            hidden: vec![64, 32],
            dropout: 0.3,
            leaky_alpha: 0.2,
            batch_norm: true,
            learning_rate: 1e-3,
            batch_size: None,
            max_epochs: 500,
            patience: 20,
            seed: 0,
        }
    }
}

impl DnnConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        DnnConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn batch_size_for(&self, rows: usize) -> usize {
        self.batch_size.unwrap_or(if rows < 64 { rows } else { 32 }).min(rows)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) || self.max_epochs == 0 || self.batch_size == Some(0) {
            return Err(Error::Config("DNN widths, batch size and max_epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("DNN learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("DNN dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DnnHistory {
    pub train_loss: Vec<f64>,
    pub eval_loss: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DnnClassifier {
    pub network: Network,
    pub num_classes: usize,
    pub history: DnnHistory,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_eval_loss: f64,
}

impl DnnClassifier {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        self.network.infer(x)
    }

    /// Mean categorical cross-entropy in inference mode.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        let p = self.predict_proba(x)?;
        Ok(loss(&p, &one_hot(y, self.num_classes)?, LossKind::CategoricalCrossEntropy)?.0)
    }

    pub fn epochs_run(&self) -> usize {
        self.history.eval_loss.len()
    }
}

impl Classifier for DnnClassifier {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.argmax_rows())
    }
}

fn check_pool(x: &Matrix, y: &[usize], num_classes: usize, what: &'static str) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::InvalidInput(format!("{what} pool is empty")));
    }
    if x.rows() != y.len() {
        return Err(Error::shape(what, x.rows(), y.len()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidInput(format!("{what} label {bad} outside [0, {num_classes})")));
    }
    Ok(())
}

/// Trains on the train pool with Adam, early-stopping on eval-pool loss;
/// the returned classifier holds the best-eval-loss parameters.
pub fn train_dnn(
    train_x: &Matrix,
    train_y: &[usize],
    eval_x: &Matrix,
    eval_y: &[usize],
    num_classes: usize,
    cfg: &DnnConfig,
) -> Result<DnnClassifier> {
    cfg.validate()?;
    check_pool(train_x, train_y, num_classes, "DNN train")?;
    check_pool(eval_x, eval_y, num_classes, "DNN eval")?;
    if eval_x.cols() != train_x.cols() {
        return Err(Error::shape("DNN eval pool features", train_x.cols(), eval_x.cols()));
    }
    let block = HiddenBlock {
        batch_norm: cfg.batch_norm,
        leaky_alpha: cfg.leaky_alpha,
        dropout: cfg.dropout,
    };
    let mut rng = seeded(cfg.seed);
    let network = Network::mlp(
        train_x.cols(),
        &cfg.hidden,
        num_classes,
        block,
        Some(ActivationKind::Softmax),
        &mut rng,
    )?;
    let mut rng = seeded(derive_seed(cfg.seed, 1));
    let mut model = DnnClassifier {
        network,
        num_classes,
        history: DnnHistory::default(),
        best_epoch: 0,
        best_eval_loss: f64::INFINITY,
    };
    let targets = one_hot(train_y, num_classes)?;
    let batch_size = cfg.batch_size_for(train_x.rows());
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut best_network = model.network.clone();
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        let batches = minibatches(train_x.rows(), batch_size, &mut rng);
        let mut total = 0.0;
        for batch in &batches {
            let xb = train_x.select_rows(batch);
            let tb = targets.select_rows(batch);
            let step = (|| {
                let p = model.network.forward(&xb, Mode::Train, &mut rng)?;
                let (l, g) = loss(&p, &tb, LossKind::CategoricalCrossEntropy)?;
                let (grads, _) = model.network.backward(&g)?;
                model.network.apply_adam(&grads, &mut adam)?;
                Ok::<_, Error>(l)
            })()
            .map_err(|e| Error::TrainingFailure {
                epoch,
                reason: e.to_string(),
            })?;
            total += step;
        }
        let eval_loss = model.loss(eval_x, eval_y)?;
        let train_loss = total / batches.len() as f64;
        if !train_loss.is_finite() || !eval_loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                reason: "DNN loss is not finite".into(),
            });
        }
        model.history.train_loss.push(train_loss);
        model.history.eval_loss.push(eval_loss);
        if eval_loss < model.best_eval_loss {
            model.best_eval_loss = eval_loss;
            model.best_epoch = epoch;
            best_network = model.network.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    model.network = best_network;
    model.network.clear_cache();
    Ok(model)
}
