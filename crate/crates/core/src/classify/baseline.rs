use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{filter_nonzero_columns, rfe, FeatureMask};
use super::kfold::{kfold_split, FoldSizes};
use super::logistic::{train_logistic_regression, LrConfig};
use super::metrics::{Averaging, Metrics};
use super::evaluate;
use crate::augment::Split;
use crate::data::{Dataset, NormalizationMethod, NormalizationRecord};
use crate::error::{Error, Result};
use crate::nncore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Raw,
    Nz,
    NzRfe,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Raw => "raw",
            Variant::Nz => "nz",
            Variant::NzRfe => "nz_rfe",
        })
    }
}

/// Column selection fitted on a fold's train rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelection {
    pub nz_threshold: f64,
    /// Columns kept by RFE; values at or above the NZ count keep them all.
    pub rfe_target: usize,
    /// Applied (fit on train rows) before RFE and LR.
    pub normalization: Option<NormalizationMethod>,
    pub lr: LrConfig,
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection {
            nz_threshold: 0.5,
            rfe_target: 20,
            normalization: Some(NormalizationMethod::Zscore),
            lr: LrConfig::default(),
        }
    }
}

/// Fits the `variant` column mask on `(x, y)` (train rows only).
pub fn fit_feature_mask(x: &Matrix, y: &[usize], num_classes: usize, variant: Variant, sel: &FeatureSelection) -> Result<FeatureMask> {
    let identity = FeatureMask::identity(x.cols());
    if variant == Variant::Raw {
        return Ok(identity);
    }
    let nz = filter_nonzero_columns(x, sel.nz_threshold)?;
    if variant == Variant::Nz || sel.rfe_target >= nz.len() {
        return Ok(nz);
    }
    let kept = nz.apply(x)?;
    let kept = match sel.normalization {
        Some(method) => {
            let rows: Vec<usize> = (0..kept.rows()).collect();
            NormalizationRecord::fit(&kept, &rows, rows.clone(), method)?.apply(&kept)?
        }
        None => kept,
    };
    nz.compose(&rfe(&kept, y, num_classes, sel.rfe_target, &sel.lr)?)
}

/// Restricts a split to `mask` columns and, if configured, normalizes with
/// statistics from its train rows.
pub fn prepare_split(split: &Split, mask: &FeatureMask, normalization: Option<NormalizationMethod>) -> Result<Split> {
    let mut out = Split {
        x_train: mask.apply(&split.x_train)?,
        x_eval: mask.apply(&split.x_eval)?,
        x_test: mask.apply(&split.x_test)?,
        ..split.clone()
    };
    if let Some(method) = normalization {
        let rows: Vec<usize> = (0..out.x_train.rows()).collect();
        let record = NormalizationRecord::fit(&out.x_train, &rows, split.ids_train.clone(), method)?;
        out.x_train = record.apply(&out.x_train)?;
        out.x_eval = record.apply(&out.x_eval)?;
        out.x_test = record.apply(&out.x_test)?;
    }
    Ok(out)
}

/// LR trained on a split's train rows, scored on its eval and test rows.
pub fn lr_on_split(split: &Split, lr: &LrConfig, averaging: Averaging) -> Result<(Metrics, Metrics)> {
    let model = train_logistic_regression(&split.x_train, &split.y_train, split.num_classes, lr)?;
    Ok((
        evaluate(&model, &split.x_eval, &split.y_eval, split.num_classes, averaging)?,
        evaluate(&model, &split.x_test, &split.y_test, split.num_classes, averaging)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub k: usize,
    pub sizes: FoldSizes,
    /// Named column sets of the dataset to evaluate (`all` is implicit).
    pub feature_sets: Vec<String>,
    pub variants: Vec<Variant>,
    pub selection: FeatureSelection,
    pub averaging: Averaging,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 5,
            sizes: FoldSizes { train: 40, eval: 8, test: 12 },
            feature_sets: vec!["original".into(), "all".into()],
            variants: vec![Variant::Raw, Variant::Nz, Variant::NzRfe],
            selection: FeatureSelection::default(),
            averaging: Averaging::Macro,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub features: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub eval_f_score: f64,
    pub mask: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub feature_set: String,
    pub variant: Variant,
    /// Column count of the feature set before selection.
    pub input_features: usize,
    pub mean_features: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub folds: Vec<FoldResult>,
    /// Fold whose F is closest to the mean F (ties to the lowest index).
    pub representative_fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub k: usize,
    pub averaging: Averaging,
    pub rows: Vec<VariantRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Index of the value closest to the mean, ties to the lowest index.
pub fn representative_index(values: &[f64]) -> usize {
    let m = mean(values.iter().copied());
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if (v - m).abs() < (values[best] - m).abs() {
            best = i;
        }
    }
    best
}

/// Cross-validated LR for every (feature set, variant) pair. Masks and
/// normalization are fit on each fold's train rows only.
pub fn run_baseline(dataset: &Dataset, cfg: &BaselineConfig) -> Result<BaselineTable> {
    if cfg.variants.is_empty() || cfg.feature_sets.is_empty() {
        return Err(Error::Config("baseline needs at least one variant and feature set".into()));
    }
    let plan = kfold_split(&dataset.y, dataset.num_classes(), cfg.k, cfg.sizes, cfg.seed)?;
    let mut rows = Vec::new();
    for set in &cfg.feature_sets {
        let columns = dataset.feature_set(set)?;
        let subset = dataset.select_columns(&columns);
        let splits: Vec<Split> = plan.folds.iter().map(|f| f.split(&subset)).collect::<Result<_>>()?;
        for &variant in &cfg.variants {
            let mut folds = Vec::with_capacity(cfg.k);
            for (i, split) in splits.iter().enumerate() {
                let mask = fit_feature_mask(&split.x_train, &split.y_train, split.num_classes, variant, &cfg.selection)?;
                let prepared = prepare_split(split, &mask, cfg.selection.normalization)?;
                let (eval, test) = lr_on_split(&prepared, &cfg.selection.lr, cfg.averaging)?;
                folds.push(FoldResult {
                    fold: i,
                    features: mask.len(),
                    precision: test.precision,
                    recall: test.recall,
                    f_score: test.f_score,
                    eval_f_score: eval.f_score,
                    mask: mask.indices.iter().map(|&c| columns[c]).collect(),
                });
            }
            let f_scores: Vec<f64> = folds.iter().map(|f| f.f_score).collect();
            rows.push(VariantRow {
                feature_set: set.clone(),
                variant,
                input_features: columns.len(),
                mean_features: mean(folds.iter().map(|f| f.features as f64)),
                precision: mean(folds.iter().map(|f| f.precision)),
                recall: mean(folds.iter().map(|f| f.recall)),
                f_score: mean(f_scores.iter().copied()),
                representative_fold: representative_index(&f_scores),
                folds,
            });
        }
    }
    Ok(BaselineTable {
        k: cfg.k,
        averaging: cfg.averaging,
        rows,
    })
}

/// The split of fold `fold` restricted to dataset columns `columns` and
/// min-max scaled with its train rows, ready for generative models.
pub fn fold_split(dataset: &Dataset, cfg: &BaselineConfig, fold: usize, columns: &[usize]) -> Result<Split> {
    let plan = kfold_split(&dataset.y, dataset.num_classes(), cfg.k, cfg.sizes, cfg.seed)?;
    let chosen = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::Config(format!("fold {fold} out of range for k = {}", cfg.k)))?;
    let split = chosen.split(&dataset.select_columns(columns))?;
    prepare_split(&split, &FeatureMask::identity(columns.len()), Some(NormalizationMethod::Minmax))
}

impl VariantRow {
    /// The representative fold's result.
    pub fn representative(&self) -> &FoldResult {
        &self.folds[self.representative_fold]
    }
}

impl BaselineTable {
    /// One line per (feature set, variant, fold) plus a `mean` line per variant.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "feature_set,variant,fold,features,precision,recall,f_score,representative")?;
        for row in &self.rows {
            for f in &row.folds {
                writeln!(
                    out,
                    "{},{},{},{},{:?},{:?},{:?},{}",
                    row.feature_set,
                    row.variant,
                    f.fold,
                    f.features,
                    f.precision,
                    f.recall,
                    f.f_score,
                    f.fold == row.representative_fold
                )?;
            }
            writeln!(
                out,
                "{},{},mean,{:?},{:?},{:?},{:?},",
                row.feature_set, row.variant, row.mean_features, row.precision, row.recall, row.f_score
            )?;
        }
        Ok(())
    }
}
