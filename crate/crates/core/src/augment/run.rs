use serde::{Deserialize, Serialize};

use super::similarity::pairwise_similarity;
use super::split::Split;
use crate::classify::{evaluate, train_dnn, Averaging, DnnConfig};
use crate::error::{Error, Result};
use crate::genmodels::{train_model, ModelKind, Synthesizer, TrainConfig};
use crate::nncore::Matrix;
use crate::rng::{derive_seed, seeded};

/// Accumulated train and eval pools handed to the evaluator.
#[derive(Debug, Clone, Copy)]
pub struct Pools<'a> {
    pub train_x: &'a Matrix,
    pub train_y: &'a [usize],
    pub eval_x: &'a Matrix,
    pub eval_y: &'a [usize],
}

/// Trains a classifier on the pools and returns `(S_eval, S_test)`, scored
/// on the split's original eval and test rows.
pub trait Evaluator: Sync {
    fn score(&self, pools: &Pools<'_>, split: &Split, seed: u64) -> Result<(f64, f64)>;
}

/// The DNN evaluator: early-stopped on the eval pool, F-score on the
/// original eval/test rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnEvaluator {
    pub config: DnnConfig,
    pub averaging: Averaging,
}

impl Evaluator for DnnEvaluator {
    fn score(&self, pools: &Pools<'_>, split: &Split, seed: u64) -> Result<(f64, f64)> {
        let model = train_dnn(
            pools.train_x,
            pools.train_y,
            pools.eval_x,
            pools.eval_y,
            split.num_classes,
            &self.config.with_seed(seed),
        )?;
        let s_eval = evaluate(&model, &split.x_eval, &split.y_eval, split.num_classes, self.averaging)?;
        let s_test = evaluate(&model, &split.x_test, &split.y_test, split.num_classes, self.averaging)?;
        Ok((s_eval.f_score, s_test.f_score))
    }
}

/// Fits a fresh generative model for one iteration.
pub trait GenerativeTrainer: Sync {
    fn train(&self, x: &Matrix, y: &[usize], num_classes: usize, seed: u64) -> Result<Box<dyn Synthesizer>>;
}

/// Trains one of the built-in model kinds with `config` (seed replaced per iteration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrainer {
    pub kind: ModelKind,
    pub config: TrainConfig,
}

impl GenerativeTrainer for ModelTrainer {
    fn train(&self, x: &Matrix, y: &[usize], num_classes: usize, seed: u64) -> Result<Box<dyn Synthesizer>> {
        Ok(Box::new(train_model(self.kind, x, y, num_classes, &self.config.with_seed(seed))?))
    }
}

/// Best score so far and the iteration that produced it; starts at `(0, 0)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BestScore {
    pub f_score: f64,
    pub index: usize,
}

impl BestScore {
    /// Replaces the best when `score >= best` (a later tie wins).
    pub fn update(&mut self, score: f64, index: usize) {
        if score >= self.f_score {
            self.f_score = score;
            self.index = index;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub accepted: bool,
    /// Why the iteration produced no batch (generative training failed).
    pub failure: Option<String>,
    pub s_eval: Option<f64>,
    pub s_test: Option<f64>,
    /// Mean normalized pairwise distance of the train-side batch to X_train.
    pub similarity: Option<f64>,
    pub train_pool_rows: usize,
    pub eval_pool_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentOptions {
    /// Number of reconstruction iterations.
    pub n: usize,
    pub seed: u64,
    /// Append a batch only if its distance to X_train beats every accepted batch.
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationResult {
    pub options: AugmentOptions,
    pub train_rows: usize,
    pub eval_rows: usize,
    pub records: Vec<IterationRecord>,
    pub score_eval: BestScore,
    pub score_test: BestScore,
}

impl AugmentationResult {
    pub fn accepted_count(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// Synthetic train rows in the pool after iteration `index`
    /// (accepted iterations up to `index` times the train size).
    pub fn synthetic_rows_at(&self, index: usize) -> usize {
        self.records.iter().filter(|r| r.accepted && r.iteration <= index).count() * self.train_rows
    }
}

/// Reconstruct-and-append loop.
///
/// Iteration `i` (1-based) trains a generator with seed `seed + i` on the
/// original train rows, reconstructs the train and eval rows, appends them
/// (with their source labels) to the train and eval pools, retrains the
/// evaluator with seed `derive_seed(seed, i)` and records scores. In gated
/// mode a batch is appended only if its distance to X_train is strictly
/// below that of every batch accepted before; rejected batches leave the
/// pools and scores untouched. Iterations whose generator fails to train
/// are recorded and skipped.
pub fn run_augmentation_with(
    split: &Split,
    trainer: &dyn GenerativeTrainer,
    evaluator: &dyn Evaluator,
    options: AugmentOptions,
) -> Result<AugmentationResult> {
    if options.n == 0 {
        return Err(Error::Config("augmentation needs N ≥ 1".into()));
    }
    split.validate()?;
    let mut pool_x = split.x_train.clone();
    let mut pool_y = split.y_train.clone();
    let mut pool2_x = split.x_eval.clone();
    let mut pool2_y = split.y_eval.clone();
    let mut score_eval = BestScore::default();
    let mut score_test = BestScore::default();
    let mut best_distance = f64::INFINITY;
    let mut records = Vec::with_capacity(options.n);
    let mut last_failure = None;

    for i in 1..=options.n {
        let gen_seed = options.seed.wrapping_add(i as u64);
        let batch = (|| {
            let model = trainer.train(&split.x_train, &split.y_train, split.num_classes, gen_seed)?;
            let mut rng = seeded(derive_seed(gen_seed, 0x5359_4e54));
            let x1 = model.synthesize(&split.x_train, &split.y_train, &mut rng)?;
            let x2 = model.synthesize(&split.x_eval, &split.y_eval, &mut rng)?;
            if x1.shape() != split.x_train.shape() || x2.shape() != split.x_eval.shape() {
                return Err(Error::Consistency("synthesizer changed the batch shape".into()));
            }
            Ok((x1, x2))
        })();
        let (x1, x2) = match batch {
            Ok(b) => b,
            Err(e) => {
                last_failure = Some(e.to_string());
                records.push(IterationRecord {
                    iteration: i,
                    accepted: false,
                    failure: Some(e.to_string()),
                    s_eval: None,
                    s_test: None,
                    similarity: None,
                    train_pool_rows: pool_x.rows(),
                    eval_pool_rows: pool2_x.rows(),
                });
                continue;
            }
        };
        let (accepted, similarity) = match (options.gated, pairwise_similarity(&x1, &split.x_train)) {
            (true, Ok(r)) => (r.distance < best_distance, Some(r.distance)),
            (false, r) => (true, r.ok().map(|r| r.distance)),
            (true, Err(e)) => {
                last_failure = Some(e.to_string());
                records.push(IterationRecord {
                    iteration: i,
                    accepted: false,
                    failure: Some(e.to_string()),
                    s_eval: None,
                    s_test: None,
                    similarity: None,
                    train_pool_rows: pool_x.rows(),
                    eval_pool_rows: pool2_x.rows(),
                });
                continue;
            }
        };
        if !accepted {
            records.push(IterationRecord {
                iteration: i,
                accepted: false,
                failure: None,
                s_eval: None,
                s_test: None,
                similarity,
                train_pool_rows: pool_x.rows(),
                eval_pool_rows: pool2_x.rows(),
            });
            continue;
        }
        if let Some(d) = similarity {
            best_distance = best_distance.min(d);
        }
        pool_x.append_rows(&x1)?;
        pool_y.extend_from_slice(&split.y_train);
        pool2_x.append_rows(&x2)?;
        pool2_y.extend_from_slice(&split.y_eval);

        let pools = Pools {
            train_x: &pool_x,
            train_y: &pool_y,
            eval_x: &pool2_x,
            eval_y: &pool2_y,
        };
        let (s_eval, s_test) = evaluator.score(&pools, split, derive_seed(options.seed, i as u64))?;
        score_eval.update(s_eval, i);
        score_test.update(s_test, i);
        records.push(IterationRecord {
            iteration: i,
            accepted: true,
            failure: None,
            s_eval: Some(s_eval),
            s_test: Some(s_test),
            similarity,
            train_pool_rows: pool_x.rows(),
            eval_pool_rows: pool2_x.rows(),
        });
    }
    if records.iter().all(|r| r.failure.is_some()) {
        return Err(Error::AllIterationsFailed {
            iterations: options.n,
            last: last_failure.unwrap_or_default(),
        });
    }
    Ok(AugmentationResult {
        options,
        train_rows: split.x_train.rows(),
        eval_rows: split.x_eval.rows(),
        records,
        score_eval,
        score_test,
    })
}

/// Ungated loop with a built-in model kind and the DNN evaluator.
pub fn run_augmentation(
    split: &Split,
    kind: ModelKind,
    n: usize,
    gen_cfg: &TrainConfig,
    clf_cfg: &DnnEvaluator,
    seed: u64,
) -> Result<AugmentationResult> {
    let trainer = ModelTrainer {
        kind,
        config: gen_cfg.clone(),
    };
    run_augmentation_with(split, &trainer, clf_cfg, AugmentOptions { n, seed, gated: false })
}

/// Similarity-gated loop with a built-in model kind and the DNN evaluator.
pub fn run_gated_augmentation(
    split: &Split,
    kind: ModelKind,
    n: usize,
    gen_cfg: &TrainConfig,
    clf_cfg: &DnnEvaluator,
    seed: u64,
) -> Result<AugmentationResult> {
    let trainer = ModelTrainer {
        kind,
        config: gen_cfg.clone(),
    };
    run_augmentation_with(split, &trainer, clf_cfg, AugmentOptions { n, seed, gated: true })
}

/// Evaluator scores with no synthetic rows (the pools are the original
/// train and eval rows), using the seed iteration 0 would get.
pub fn unaugmented_scores(split: &Split, evaluator: &dyn Evaluator, seed: u64) -> Result<(f64, f64)> {
    let pools = Pools {
        train_x: &split.x_train,
        train_y: &split.y_train,
        eval_x: &split.x_eval,
        eval_y: &split.y_eval,
    };
    evaluator.score(&pools, split, derive_seed(seed, 0))
}
