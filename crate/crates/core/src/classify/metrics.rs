use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Macro,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Number of true samples of this class.
    pub support: usize,
}

/// Averaged precision/recall/F plus per-class detail.
///
/// Averages run over the classes that occur in either the true or the
/// predicted labels. Undefined ratios (zero denominators) count as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub accuracy: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassMetrics>,
}

/// `matrix[true][pred]` counts.
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape("confusion matrix predictions", y_true.len(), y_pred.len()));
    }
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::InvalidInput(format!("label outside [0, {num_classes})")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_predictions(y_true: &[usize], y_pred: &[usize], num_classes: usize, averaging: Averaging) -> Result<Metrics> {
    if y_true.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty label set".into()));
    }
    let cm = confusion_matrix(y_true, y_pred, num_classes)?;
    let mut per_class = Vec::new();
    for c in 0..num_classes {
        let tp = cm[c][c];
        let support: usize = cm[c].iter().sum();
        let predicted: usize = cm.iter().map(|row| row[c]).sum();
        if support == 0 && predicted == 0 {
            continue;
        }
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f_score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            class: c,
            precision,
            recall,
            f_score,
            support,
        });
    }
    let n = y_true.len() as f64;
    let avg = |f: fn(&ClassMetrics) -> f64| match averaging {
        Averaging::Macro => per_class.iter().map(f).sum::<f64>() / per_class.len() as f64,
        Averaging::Weighted => per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / n,
    };
    let correct = (0..num_classes).map(|c| cm[c][c]).sum::<usize>();
    Ok(Metrics {
        precision: avg(|m| m.precision),
        recall: avg(|m| m.recall),
        f_score: avg(|m| m.f_score),
        accuracy: correct as f64 / n,
        averaging,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m = evaluate_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], 3, Averaging::Macro).unwrap();
        assert_eq!((m.precision, m.recall, m.f_score, m.accuracy), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn two_class_hand_case() {
        // class 0: TP=1, FP=1, FN=0
        let m = evaluate_predictions(&[0, 1], &[0, 0], 2, Averaging::Macro).unwrap();
        let a = &m.per_class[0];
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((a.f_score - 2.0 / 3.0).abs() < 1e-15);
        let b = &m.per_class[1];
        assert_eq!((b.precision, b.recall, b.f_score), (0.0, 0.0, 0.0));
        assert!((m.f_score - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_rejected() {
        assert!(evaluate_predictions(&[], &[], 2, Averaging::Macro).is_err());
    }

    #[test]
    fn weighted_uses_true_support() {
        let m = evaluate_predictions(&[0, 0, 0, 1], &[0, 0, 1, 1], 2, Averaging::Weighted).unwrap();
        let want = 0.75 * m.per_class[0].f_score + 0.25 * m.per_class[1].f_score;
        assert!((m.f_score - want).abs() < 1e-15);
    }
}
