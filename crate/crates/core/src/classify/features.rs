use serde::{Deserialize, Serialize};

use super::logistic::{train_logistic_regression, LrConfig};
use crate::error::{Error, Result};
use crate::nncore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskStep {
    Nz,
    Rfe,
}

/// Retained column indices relative to a matrix of `original_count` columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub indices: Vec<usize>,
    pub provenance: Vec<MaskStep>,
    pub original_count: usize,
}

impl FeatureMask {
    pub fn identity(count: usize) -> Self {
        FeatureMask {
            indices: (0..count).collect(),
            provenance: Vec::new(),
            original_count: count,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.original_count {
            return Err(Error::shape("feature mask input", self.original_count, x.cols()));
        }
        Ok(x.select_columns(&self.indices))
    }

    /// `inner` was computed on the columns this mask retains; the result maps
    /// straight from this mask's original columns.
    pub fn compose(&self, inner: &FeatureMask) -> Result<FeatureMask> {
        if inner.original_count != self.len() {
            return Err(Error::shape("composed feature mask", self.len(), inner.original_count));
        }
        Ok(FeatureMask {
            indices: inner.indices.iter().map(|&i| self.indices[i]).collect(),
            provenance: self.provenance.iter().chain(&inner.provenance).copied().collect(),
            original_count: self.original_count,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] < w[1]) && self.indices.last().is_none_or(|&i| i < self.original_count)
    }
}

/// Keeps columns whose fraction of exact zeros is at most `zero_fraction_threshold`.
pub fn filter_nonzero_columns(x: &Matrix, zero_fraction_threshold: f64) -> Result<FeatureMask> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidInput("cannot filter an empty matrix".into()));
    }
    let n = x.rows() as f64;
    let mut zeros = vec![0usize; x.cols()];
    for row in x.row_iter() {
        for (z, &v) in zeros.iter_mut().zip(row) {
            if v == 0.0 {
                *z += 1;
            }
        }
    }
    let indices: Vec<usize> = (0..x.cols()).filter(|&c| zeros[c] as f64 / n <= zero_fraction_threshold).collect();
    if indices.is_empty() {
        return Err(Error::EmptyFeatures(format!("every column is more than {zero_fraction_threshold} zeros")));
    }
    Ok(FeatureMask {
        indices,
        provenance: vec![MaskStep::Nz],
        original_count: x.cols(),
    })
}

/// One RFE elimination: the position (within `columns`) to drop next.
///
/// Constant columns go first (lowest index); otherwise an LR is fitted on
/// the remaining columns and the column with the smallest weight-row norm
/// is dropped, ties to the lowest index.
pub fn rfe_round(x: &Matrix, y: &[usize], num_classes: usize, columns: &[usize], cfg: &LrConfig) -> Result<usize> {
    let constant = columns.iter().position(|&c| {
        let first = x.get(0, c);
        (1..x.rows()).all(|r| x.get(r, c) == first)
    });
    if let Some(pos) = constant {
        return Ok(pos);
    }
    let model = train_logistic_regression(&x.select_columns(columns), y, num_classes, cfg)?;
    let importance = model.feature_importance();
    let mut best = 0;
    for (i, &v) in importance.iter().enumerate() {
        if v < importance[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Recursive feature elimination down to `target_count` columns, one
/// column per round.
pub fn rfe(x: &Matrix, y: &[usize], num_classes: usize, target_count: usize, cfg: &LrConfig) -> Result<FeatureMask> {
    if target_count == 0 || target_count > x.cols() {
        return Err(Error::Config(format!(
            "RFE target {target_count} outside [1, {}]",
            x.cols()
        )));
    }
    let mut columns: Vec<usize> = (0..x.cols()).collect();
    while columns.len() > target_count {
        let drop = rfe_round(x, y, num_classes, &columns, cfg)?;
        columns.remove(drop);
    }
    Ok(FeatureMask {
        indices: columns,
        provenance: vec![MaskStep::Rfe],
        original_count: x.cols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nz_threshold_is_inclusive() {
        let x = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 2.0, 3.0], [0.0, 3.0, 0.0], [1.0, 4.0, 5.0]]).unwrap();
        let mask = filter_nonzero_columns(&x, 0.5).unwrap();
        assert_eq!(mask.indices, vec![1, 2]);
        assert_eq!(mask.provenance, vec![MaskStep::Nz]);
        let all = filter_nonzero_columns(&Matrix::filled(3, 2, 1.0), 0.5).unwrap();
        assert_eq!(all.indices, vec![0, 1]);
        assert!(matches!(filter_nonzero_columns(&Matrix::zeros(3, 2), 0.5), Err(Error::EmptyFeatures(_))));
    }

    #[test]
    fn compose_maps_back() {
        let outer = FeatureMask {
            indices: vec![1, 3, 4, 7],
            provenance: vec![MaskStep::Nz],
            original_count: 9,
        };
        let inner = FeatureMask {
            indices: vec![0, 2],
            provenance: vec![MaskStep::Rfe],
            original_count: 4,
        };
        let c = outer.compose(&inner).unwrap();
        assert_eq!(c.indices, vec![1, 4]);
        assert_eq!(c.provenance, vec![MaskStep::Nz, MaskStep::Rfe]);
        assert!(c.is_valid());
        assert!(inner.compose(&outer).is_err());
    }

    #[test]
    fn rfe_identity_and_constant_first() {
        let x = Matrix::from_rows(&[[1.0, 5.0, 0.2], [2.0, 5.0, 0.1], [3.0, 5.0, 0.4], [4.0, 5.0, 0.3]]).unwrap();
        let y = [0, 0, 1, 1];
        assert_eq!(rfe(&x, &y, 2, 3, &LrConfig::default()).unwrap().indices, vec![0, 1, 2]);
        assert_eq!(rfe_round(&x, &y, 2, &[0, 1, 2], &LrConfig::default()).unwrap(), 1);
        assert!(rfe(&x, &y, 2, 0, &LrConfig::default()).is_err());
    }
}
