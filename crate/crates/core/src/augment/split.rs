use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nncore::Matrix;

/// Train / eval / test partition with the sample ids of every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub x_train: Matrix,
    pub y_train: Vec<usize>,
    pub x_eval: Matrix,
    pub y_eval: Vec<usize>,
    pub x_test: Matrix,
    pub y_test: Vec<usize>,
    pub ids_train: Vec<usize>,
    pub ids_eval: Vec<usize>,
    pub ids_test: Vec<usize>,
    pub num_classes: usize,
}

impl Split {
    /// Builds a split from three datasets sharing one class list.
    ///
    /// The test part may come from a different source (e.g. the MNIST test
    /// file), so only train/eval ids are required to be disjoint from each
    /// other when sources differ; use [`Split::validate_disjoint`] for
    /// single-source splits.
    pub fn from_datasets(train: &Dataset, eval: &Dataset, test: &Dataset) -> Result<Self> {
        if train.class_names != eval.class_names || train.class_names != test.class_names {
            return Err(Error::Consistency("split parts disagree on class names".into()));
        }
        let split = Split {
            x_train: train.x.clone(),
            y_train: train.y.clone(),
            x_eval: eval.x.clone(),
            y_eval: eval.y.clone(),
            x_test: test.x.clone(),
            y_test: test.y.clone(),
            ids_train: train.sample_ids.clone(),
            ids_eval: eval.sample_ids.clone(),
            ids_test: test.sample_ids.clone(),
            num_classes: train.num_classes(),
        };
        split.validate()?;
        Ok(split)
    }

    /// Shapes, label ranges, train/eval disjointness and class coverage.
    pub fn validate(&self) -> Result<()> {
        let parts = [
            ("train", &self.x_train, &self.y_train, &self.ids_train),
            ("eval", &self.x_eval, &self.y_eval, &self.ids_eval),
            ("test", &self.x_test, &self.y_test, &self.ids_test),
        ];
        for (name, x, y, ids) in parts {
            if x.rows() == 0 {
                return Err(Error::InvalidInput(format!("{name} part is empty")));
            }
            if x.rows() != y.len() || x.rows() != ids.len() {
                return Err(Error::shape("split part rows", x.rows(), y.len().min(ids.len())));
            }
            if x.cols() != self.x_train.cols() {
                return Err(Error::shape("split part features", self.x_train.cols(), x.cols()));
            }
            if let Some(&bad) = y.iter().find(|&&c| c >= self.num_classes) {
                return Err(Error::InvalidInput(format!("{name} label {bad} outside [0, {})", self.num_classes)));
            }
        }
        let train: BTreeSet<usize> = self.ids_train.iter().copied().collect();
        if self.ids_eval.iter().any(|id| train.contains(id)) {
            return Err(Error::Consistency("train and eval share sample ids".into()));
        }
        let train_classes: BTreeSet<usize> = self.y_train.iter().copied().collect();
        if self.y_eval.iter().chain(&self.y_test).any(|c| !train_classes.contains(c)) {
            return Err(Error::Consistency("eval/test contain a class absent from train".into()));
        }
        Ok(())
    }

    /// Additionally requires test ids to be disjoint from train and eval.
    pub fn validate_disjoint(&self) -> Result<()> {
        self.validate()?;
        let seen: BTreeSet<usize> = self.ids_train.iter().chain(&self.ids_eval).copied().collect();
        if self.ids_test.iter().any(|id| seen.contains(id)) {
            return Err(Error::Consistency("test shares sample ids with train/eval".into()));
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.x_train.cols()
    }
}
