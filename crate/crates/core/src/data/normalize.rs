use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nncore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMethod {
    #[default]
    Minmax,
    Zscore,
}

/// Affine map for one column: `(x − offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    /// Min (min-max) or mean (z-score) of the fitting rows.
    pub offset: f64,
    /// `max − min` or the population standard deviation.
    pub scale: f64,
    /// The fitting rows were constant in this column; it maps to 0.
    pub constant: bool,
}

/// Per-column normalization fitted on a known set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub method: NormalizationMethod,
    /// Sample ids of the rows the statistics were computed on.
    pub fit_ids: Vec<usize>,
    pub columns: Vec<ColumnScale>,
}

impl NormalizationRecord {
    /// Fits on the rows `fit_rows` of `x`; `fit_ids` is stored as provenance.
    pub fn fit(x: &Matrix, fit_rows: &[usize], fit_ids: Vec<usize>, method: NormalizationMethod) -> Result<Self> {
        if fit_rows.is_empty() {
            return Err(Error::InvalidInput("normalization fit subset is empty".into()));
        }
        let columns = (0..x.cols())
            .map(|c| {
                let values: Vec<f64> = fit_rows.iter().map(|&r| x.get(r, c)).collect();
                let (offset, scale) = match method {
                    NormalizationMethod::Minmax => {
                        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        (min, max - min)
                    }
                    NormalizationMethod::Zscore => {
                        let n = values.len() as f64;
                        let mean = values.iter().sum::<f64>() / n;
                        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        (mean, var.sqrt())
                    }
                };
                ColumnScale {
                    offset,
                    scale,
                    constant: scale == 0.0,
                }
            })
            .collect();
        Ok(NormalizationRecord {
            method,
            fit_ids,
            columns,
        })
    }

    /// Min-max output is clamped to `[0, 1]`; constant columns become 0.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut out = x.clone();
        let cols = self.columns.len();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let s = &self.columns[i % cols];
            *v = if s.constant {
                0.0
            } else {
                let t = (*v - s.offset) / s.scale;
                match self.method {
                    NormalizationMethod::Minmax => t.clamp(0.0, 1.0),
                    NormalizationMethod::Zscore => t,
                }
            };
        }
        Ok(out)
    }

    /// Maps normalized values back; constant columns return their fitted value.
    pub fn inverse(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut out = x.clone();
        let cols = self.columns.len();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let s = &self.columns[i % cols];
            *v = if s.constant { s.offset } else { *v * s.scale + s.offset };
        }
        Ok(out)
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&c| self.columns[c].constant).collect()
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.columns.len() {
            return Err(Error::shape("normalization columns", self.columns.len(), x.cols()));
        }
        Ok(())
    }
}

/// Normalizes every row of `dataset` with statistics from the rows whose
/// sample ids are `fit_on`.
pub fn normalize(dataset: &Dataset, method: NormalizationMethod, fit_on: &[usize]) -> Result<(Dataset, NormalizationRecord)> {
    let rows = dataset.rows_for_ids(fit_on)?;
    let record = NormalizationRecord::fit(&dataset.x, &rows, fit_on.to_vec(), method)?;
    let out = Dataset {
        x: record.apply(&dataset.x)?,
        normalization: Some(record.clone()),
        ..dataset.clone()
    };
    Ok((out, record))
}
