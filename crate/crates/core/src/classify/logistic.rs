use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::nncore::{activation_forward, adam_step, one_hot, ActivationKind, AdamState, Gradient, Matrix};

/// Multinomial logistic regression settings.
///
/// The objective is `mean cross-entropy + l2 / (2N) · ‖W‖²` (bias not
/// penalized), i.e. `l2` plays the role of an inverse regularization
/// constant `1/C` on the summed loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the largest absolute gradient entry falls below this.
    pub tolerance: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            l2: 1.0,
            learning_rate: 0.01,
            max_epochs: 3000,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `[features × classes]`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub l2: f64,
    pub converged: bool,
    pub epochs_run: usize,
    pub final_gradient_norm: f64,
    pub final_loss: f64,
}

impl LogisticModel {
    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.weights.rows() {
            return Err(Error::shape("logistic regression input", self.weights.rows(), x.cols()));
        }
        let mut logits = x.matmul(&self.weights)?;
        for r in 0..logits.rows() {
            for (v, b) in logits.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(activation_forward(&logits, ActivationKind::Softmax))
    }

    /// Per-feature importance: L2 norm of the feature's weight row.
    pub fn feature_importance(&self) -> Vec<f64> {
        self.weights.row_iter().map(|r| r.iter().map(|w| w * w).sum::<f64>().sqrt()).collect()
    }
}

impl Classifier for LogisticModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.argmax_rows())
    }
}

/// Objective value and gradients `(dW, db)` at the current parameters.
fn objective(model: &LogisticModel, x: &Matrix, targets: &Matrix) -> Result<(f64, Matrix, Vec<f64>)> {
    let n = x.rows() as f64;
    let p = model.predict_proba(x)?;
    let mut ce = 0.0;
    let mut g = p.clone();
    for (gv, t) in g.data_mut().iter_mut().zip(targets.data()) {
        *gv = (*gv - t) / n;
    }
    for (pv, t) in p.data().iter().zip(targets.data()) {
        if *t > 0.0 {
            ce -= t * pv.max(f64::MIN_POSITIVE).ln();
        }
    }
    let mut dw = x.t_matmul(&g)?;
    let mut penalty = 0.0;
    for (d, w) in dw.data_mut().iter_mut().zip(model.weights.data()) {
        *d += model.l2 / n * w;
        penalty += w * w;
    }
    let loss = ce / n + model.l2 / (2.0 * n) * penalty;
    Ok((loss, dw, g.column_sums()))
}

/// Full-batch Adam from zero initialization until the gradient max-norm
/// drops below `cfg.tolerance` or `cfg.max_epochs` is reached
/// (`converged` records which).
pub fn train_logistic_regression(x: &Matrix, y: &[usize], num_classes: usize, cfg: &LrConfig) -> Result<LogisticModel> {
    if x.rows() != y.len() {
        return Err(Error::shape("logistic regression labels", x.rows(), y.len()));
    }
    if x.rows() == 0 {
        return Err(Error::InvalidInput("logistic regression needs samples".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidInput("logistic regression needs at least 2 classes".into()));
    }
    if !(cfg.l2 >= 0.0) || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config("l2 must be ≥ 0 and learning_rate > 0".into()));
    }
    let targets = one_hot(y, num_classes)?;
    let mut model = LogisticModel {
        weights: Matrix::zeros(x.cols(), num_classes),
        bias: vec![0.0; num_classes],
        l2: cfg.l2,
        converged: false,
        epochs_run: 0,
        final_gradient_norm: f64::INFINITY,
        final_loss: f64::NAN,
    };
    let mut adam = AdamState::new(cfg.learning_rate);
    for epoch in 0..=cfg.max_epochs {
        let (loss, dw, db) = objective(&model, x, &targets)?;
        let grad = Gradient {
            blocks: vec![dw.into_data(), db],
        };
        model.final_gradient_norm = grad.max_abs();
        model.final_loss = loss;
        model.epochs_run = epoch;
        if !loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                reason: "logistic regression loss is not finite".into(),
            });
        }
        if model.final_gradient_norm < cfg.tolerance {
            model.converged = true;
            break;
        }
        if epoch == cfg.max_epochs {
            break;
        }
        let mut params: Vec<&mut [f64]> = vec![model.weights.data_mut(), &mut model.bias];
        adam_step(&mut params, &grad, &mut adam)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_toy_is_fit_perfectly() {
        let x = Matrix::from_rows(&[[0.0, 0.1], [0.2, 0.0], [0.1, 0.3], [1.0, 0.9], [0.8, 1.0], [0.9, 1.2]]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let model = train_logistic_regression(&x, &y, 2, &LrConfig::default()).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn symmetric_points_put_boundary_at_midpoint() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let cfg = LrConfig {
            l2: 0.0,
            max_epochs: 500,
            ..LrConfig::default()
        };
        let model = train_logistic_regression(&x, &[0, 1], 2, &cfg).unwrap();
        let p = model.predict_proba(&Matrix::from_rows(&[[0.0]]).unwrap()).unwrap();
        assert!((p.get(0, 0) - 0.5).abs() < 1e-12);
        assert!(!model.converged, "unregularized separable fit cannot reach zero gradient");
    }

    #[test]
    fn regularized_fit_converges() {
        let x = Matrix::from_rows(&[[-1.0], [1.0], [0.5], [-0.2]]).unwrap();
        let cfg = LrConfig {
            max_epochs: 20000,
            ..LrConfig::default()
        };
        let model = train_logistic_regression(&x, &[0, 1, 0, 1], 2, &cfg).unwrap();
        assert!(model.converged);
        assert!(model.final_gradient_norm < 1e-5);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let x = Matrix::from_rows(&[[0.3, -1.0], [1.2, 0.4], [-0.5, 0.9]]).unwrap();
        let targets = one_hot(&[0, 2, 1], 3).unwrap();
        let model = LogisticModel {
            weights: Matrix::from_rows(&[[0.1, -0.2, 0.3], [0.5, 0.0, -0.4]]).unwrap(),
            bias: vec![0.05, -0.1, 0.2],
            l2: 0.7,
            converged: false,
            epochs_run: 0,
            final_gradient_norm: 0.0,
            final_loss: 0.0,
        };
        let (_, dw, db) = objective(&model, &x, &targets).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut up = model.clone();
            up.weights.data_mut()[i] += h;
            let mut down = model.clone();
            down.weights.data_mut()[i] -= h;
            let fd = (objective(&up, &x, &targets).unwrap().0 - objective(&down, &x, &targets).unwrap().0) / (2.0 * h);
            assert!((fd - dw.data()[i]).abs() < 1e-8);
        }
        for k in 0..3 {
            let mut up = model.clone();
            up.bias[k] += h;
            let mut down = model.clone();
            down.bias[k] -= h;
            let fd = (objective(&up, &x, &targets).unwrap().0 - objective(&down, &x, &targets).unwrap().0) / (2.0 * h);
            assert!((fd - db[k]).abs() < 1e-8);
        }
    }
}
