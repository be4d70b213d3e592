//! Datasets: MNIST IDX files, the 1500-image MNIST subset, CSV tables,
//! normalization and the synthetic clinical-scale surrogate.

mod csv_io;
mod idx;
mod normalize;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, load_dataset, read_sidecar, save_csv, sidecar_path, Sidecar};
pub use idx::{
    load_idx, parse_idx, read_idx_images, read_idx_labels, subset_mnist, write_idx_images,
    write_idx_labels, IdxArray, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use normalize::{normalize, ColumnScale, NormalizationMethod, NormalizationRecord};
pub use synth::{synth_hallam, SynthConfig};

use crate::error::{Error, Result};
use crate::nncore::Matrix;

/// Feature matrix with dense class ids and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
    pub column_names: Vec<String>,
    /// Stable identifier per row; survives subsetting.
    pub sample_ids: Vec<usize>,
    pub normalization: Option<NormalizationRecord>,
    /// Named column subsets (e.g. `original`, `all`) as increasing index lists.
    pub feature_sets: BTreeMap<String, Vec<usize>>,
    pub seed: Option<u64>,
}

impl Dataset {
    /// Builds a dataset with sequential sample ids, checking every invariant.
    pub fn new(x: Matrix, y: Vec<usize>, class_names: Vec<String>, column_names: Vec<String>) -> Result<Self> {
        let ds = Dataset {
            sample_ids: (0..x.rows()).collect(),
            x,
            y,
            class_names,
            column_names,
            normalization: None,
            feature_sets: BTreeMap::new(),
            seed: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.rows();
        if self.y.len() != n {
            return Err(Error::shape("dataset labels", n, self.y.len()));
        }
        if self.sample_ids.len() != n {
            return Err(Error::shape("dataset sample ids", n, self.sample_ids.len()));
        }
        if self.column_names.len() != self.x.cols() {
            return Err(Error::shape("dataset column names", self.x.cols(), self.column_names.len()));
        }
        if let Some(&bad) = self.y.iter().find(|&&c| c >= self.class_names.len()) {
            return Err(Error::InvalidInput(format!(
                "class id {bad} has no name ({} classes)",
                self.class_names.len()
            )));
        }
        for (name, cols) in &self.feature_sets {
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= self.x.cols()) {
                return Err(Error::InvalidInput(format!("feature set `{name}` is not a valid column list")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn num_features(&self) -> usize {
        self.x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// Rows by position; class names, columns and feature sets are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            sample_ids: rows.iter().map(|&r| self.sample_ids[r]).collect(),
            ..self.clone()
        }
    }

    /// Columns by position. Feature sets are re-indexed, keeping only the
    /// retained columns.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let position: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let feature_sets = self
            .feature_sets
            .iter()
            .map(|(k, v)| {
                let mut kept: Vec<usize> = v.iter().filter_map(|c| position.get(c).copied()).collect();
                kept.sort_unstable();
                (k.clone(), kept)
            })
            .collect();
        Dataset {
            x: self.x.select_columns(cols),
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            feature_sets,
            normalization: None,
            ..self.clone()
        }
    }

    /// Column indices of a named feature set; `all` is always available.
    pub fn feature_set(&self, name: &str) -> Result<Vec<usize>> {
        match self.feature_sets.get(name) {
            Some(cols) => Ok(cols.clone()),
            None if name == "all" => Ok((0..self.num_features()).collect()),
            None => Err(Error::Config(format!("dataset has no feature set `{name}`"))),
        }
    }

    /// Row positions of the given sample ids.
    pub fn rows_for_ids(&self, ids: &[usize]) -> Result<Vec<usize>> {
        let index: BTreeMap<usize, usize> = self.sample_ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        ids.iter()
            .map(|id| index.get(id).copied().ok_or_else(|| Error::InvalidInput(format!("unknown sample id {id}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
        let mut ds = Dataset::new(
            x,
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
            vec!["c0".into(), "c1".into(), "c2".into()],
        )
        .unwrap();
        ds.feature_sets.insert("original".into(), vec![0, 2]);
        ds
    }

    #[test]
    fn select_keeps_ids_and_reindexes_sets() {
        let ds = toy();
        let rows = ds.select_rows(&[2, 0]);
        assert_eq!(rows.sample_ids, vec![2, 0]);
        assert_eq!(rows.y, vec![0, 0]);
        let cols = ds.select_columns(&[1, 2]);
        assert_eq!(cols.column_names, vec!["c1", "c2"]);
        assert_eq!(cols.feature_sets["original"], vec![1]);
        assert_eq!(ds.rows_for_ids(&[2, 1]).unwrap(), vec![2, 1]);
        assert_eq!(ds.feature_set("all").unwrap(), vec![0, 1, 2]);
        assert!(ds.feature_set("nope").is_err());
    }

    #[test]
    fn validate_catches_bad_labels() {
        let mut ds = toy();
        ds.y[0] = 5;
        assert!(ds.validate().is_err());
        assert_eq!(toy().class_counts(), vec![2, 1]);
    }
}
