use std::collections::BTreeMap;

use augforge_core::augment::AugmentationResult;
use augforge_core::classify::BaselineTable;
use augforge_core::genmodels::ModelKind;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const REPORT_FORMAT: &str = "augforge-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub class_names: Vec<String>,
    /// Columns the models see, after any fold-level selection.
    pub columns: Vec<String>,
    pub train_rows: usize,
    pub eval_rows: usize,
    pub test_rows: usize,
    /// Fold augmented, for fold splits.
    pub fold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    /// LR on the augmented split's train rows.
    pub lr_eval_f: f64,
    pub lr_test_f: f64,
    /// Cross-validated LR table, for fold splits.
    pub table: Option<BaselineTable>,
    /// DNN evaluator trained without synthetic rows.
    pub dnn_eval_f: f64,
    pub dnn_test_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub model: ModelKind,
    pub result: AugmentationResult,
}

/// Best score of one model and how many synthetic train rows produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub model: ModelKind,
    pub accepted_batches: usize,
    pub best_test_f: f64,
    pub best_test_index: usize,
    /// Synthetic train rows in the pool at `best_test_index`.
    pub synthetic_rows: usize,
    pub best_eval_f: f64,
    pub best_eval_index: usize,
    pub synthetic_rows_at_eval_best: usize,
}

impl BestRow {
    pub fn from_result(model: ModelKind, r: &AugmentationResult) -> BestRow {
        BestRow {
            model,
            accepted_batches: r.accepted_count(),
            best_test_f: r.score_test.f_score,
            best_test_index: r.score_test.index,
            synthetic_rows: r.synthetic_rows_at(r.score_test.index),
            best_eval_f: r.score_eval.f_score,
            best_eval_index: r.score_eval.index,
            synthetic_rows_at_eval_best: r.synthetic_rows_at(r.score_eval.index),
        }
    }
}

/// Everything that varies between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub model_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub config: ExperimentConfig,
    pub data: DataSummary,
    pub baseline: BaselineSummary,
    pub runs: Vec<ModelRun>,
    pub best: Vec<BestRow>,
    pub versions: BTreeMap<String, String>,
    pub timing: Timing,
}

impl RunReport {
    /// Report minus its `timing` block, for run-to-run comparison.
    pub fn without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("timing");
        }
        v
    }

    /// Checks each best row against the maxima of its trace.
    pub fn best_rows_consistent(&self) -> bool {
        self.runs.iter().zip(&self.best).all(|(run, row)| {
            let max_of = |f: fn(&augforge_core::augment::IterationRecord) -> Option<f64>| {
                run.result.records.iter().filter_map(f).fold(0.0f64, f64::max)
            };
            run.model == row.model
                && max_of(|r| r.s_test) == row.best_test_f
                && max_of(|r| r.s_eval) == row.best_eval_f
                && *row == BestRow::from_result(run.model, &run.result)
        })
    }
}
