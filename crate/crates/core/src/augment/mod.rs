//! The reconstruct-and-append augmentation loop, its similarity-gated
//! variant, and the train/eval/test split it operates on.

mod run;
mod similarity;
mod split;
mod trace;

pub use run::{
    run_augmentation, run_augmentation_with, run_gated_augmentation, unaugmented_scores,
    AugmentOptions, AugmentationResult, BestScore, DnnEvaluator, Evaluator, GenerativeTrainer,
    IterationRecord, ModelTrainer, Pools,
};
pub use similarity::{pairwise_similarity, SimilarityReport};
pub use split::Split;
pub use trace::{parse_trace_csv, read_trace_csv, TraceRow, TRACE_COLUMNS};
