use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;

/// Mean absolute per-feature difference between two row sets in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub distance: f64,
    pub per_feature: Vec<f64>,
    /// Row `i` of A was compared with row `i` of B (else all cross pairs).
    pub paired: bool,
}

/// Normalized pairwise distance: row `i` of `a` against row `i` of `b` when
/// both have the same row count, otherwise every row of `a` against every
/// row of `b`; per pair the mean absolute feature difference, averaged over
/// pairs. Inputs must already lie in `[0, 1]`.
pub fn pairwise_similarity(a: &Matrix, b: &Matrix) -> Result<SimilarityReport> {
    if a.rows() == 0 || b.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput("similarity needs non-empty inputs".into()));
    }
    if a.cols() != b.cols() {
        return Err(Error::shape("similarity features", a.cols(), b.cols()));
    }
    if a.data().iter().chain(b.data()).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("similarity inputs must be normalized to [0, 1]".into()));
    }
    let f = a.cols();
    let mut per_feature = vec![0.0; f];
    let paired = a.rows() == b.rows();
    let pairs = if paired {
        for (ra, rb) in a.row_iter().zip(b.row_iter()) {
            for ((s, x), y) in per_feature.iter_mut().zip(ra).zip(rb) {
                *s += (x - y).abs();
            }
        }
        a.rows()
    } else {
        for ra in a.row_iter() {
            for rb in b.row_iter() {
                for ((s, x), y) in per_feature.iter_mut().zip(ra).zip(rb) {
                    *s += (x - y).abs();
                }
            }
        }
        a.rows() * b.rows()
    };
    per_feature.iter_mut().for_each(|s| *s /= pairs as f64);
    let distance = per_feature.iter().sum::<f64>() / f as f64;
    Ok(SimilarityReport {
        distance,
        per_feature,
        paired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let a = Matrix::from_rows(&[[0.2, 0.7], [0.1, 0.0]]).unwrap();
        assert_eq!(pairwise_similarity(&a, &a).unwrap().distance, 0.0);
        let zeros = Matrix::zeros(3, 4);
        let ones = Matrix::filled(3, 4, 1.0);
        assert_eq!(pairwise_similarity(&zeros, &ones).unwrap().distance, 1.0);
        let r = pairwise_similarity(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap(), &Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(r.distance, 0.5);
        assert_eq!(r.per_feature, vec![1.0, 0.0]);
    }

    #[test]
    fn cross_pairs_when_sizes_differ() {
        let a = Matrix::from_rows(&[[0.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let r = pairwise_similarity(&a, &b).unwrap();
        assert!(!r.paired);
        assert_eq!(r.distance, 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(pairwise_similarity(&Matrix::zeros(0, 2), &Matrix::zeros(1, 2)).is_err());
        assert!(pairwise_similarity(&Matrix::filled(1, 2, 2.0), &Matrix::zeros(1, 2)).is_err());
        assert!(pairwise_similarity(&Matrix::zeros(1, 3), &Matrix::zeros(1, 2)).is_err());
    }
}
