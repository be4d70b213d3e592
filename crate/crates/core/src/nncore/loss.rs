use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Probabilities entering a log are clamped to `[ε, 1−ε]`.
pub const LOSS_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over all elements of `−t·ln p − (1−t)·ln(1−p)`.
    BinaryCrossEntropy,
    /// Mean over rows of `−Σ_k t_k·ln p_k`.
    CategoricalCrossEntropy,
    /// Mean over all elements of `(p − t)²`.
    MeanSquaredError,
}

/// Scalar loss and its gradient with respect to `prediction`.
///
/// The clamped cross-entropy gradient is evaluated at the clamped
/// probability rather than zeroed, so saturated outputs still receive a
/// learning signal.
pub fn loss(prediction: &Matrix, target: &Matrix, kind: LossKind) -> Result<(f64, Matrix)> {
    prediction.expect_same_shape(target, "loss")?;
    if prediction.rows() == 0 {
        return Err(Error::InvalidInput("loss of an empty batch".into()));
    }
    let clamp = |p: f64| p.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
    match kind {
        LossKind::BinaryCrossEntropy => {
            let n = prediction.data().len() as f64;
            let mut total = 0.0;
            let grad = prediction.zip_map(target, |p, t| {
                let p = clamp(p);
                total += -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
                (p - t) / (p * (1.0 - p)) / n
            })?;
            Ok(((total / n).max(0.0), grad))
        }
        LossKind::CategoricalCrossEntropy => {
            let n = prediction.rows() as f64;
            let mut total = 0.0;
            let grad = prediction.zip_map(target, |p, t| {
                let p = clamp(p);
                total += -t * p.ln();
                -t / p / n
            })?;
            Ok(((total / n).max(0.0), grad))
        }
        LossKind::MeanSquaredError => {
            let n = prediction.data().len() as f64;
            let mut total = 0.0;
            let grad = prediction.zip_map(target, |p, t| {
                total += (p - t) * (p - t);
                2.0 * (p - t) / n
            })?;
            Ok((total / n, grad))
        }
    }
}
