//! Baseline and evaluator classifiers: logistic regression with NZ
//! filtering and RFE, the two-hidden-layer DNN evaluator, metrics and
//! stratified k-fold splitting.

mod baseline;
mod dnn;
mod features;
mod kfold;
mod logistic;
mod metrics;

pub use baseline::{
    fit_feature_mask, fold_split, lr_on_split, prepare_split, representative_index, run_baseline,
    BaselineConfig, BaselineTable, FeatureSelection, FoldResult, Variant, VariantRow,
};
pub use dnn::{train_dnn, DnnClassifier, DnnConfig, DnnHistory};
pub use features::{filter_nonzero_columns, rfe, rfe_round, FeatureMask, MaskStep};
pub use kfold::{kfold_split, Fold, FoldPlan, FoldSizes};
pub use logistic::{train_logistic_regression, LogisticModel, LrConfig};
pub use metrics::{confusion_matrix, evaluate_predictions, Averaging, ClassMetrics, Metrics};

use crate::error::Result;
use crate::nncore::Matrix;

pub trait Classifier {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>>;
}

/// Scores `model` on `(x, y)`.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, x: &Matrix, y: &[usize], num_classes: usize, averaging: Averaging) -> Result<Metrics> {
    let pred = model.predict(x)?;
    evaluate_predictions(y, &pred, num_classes, averaging)
}
