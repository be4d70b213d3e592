//! Metrics, feature selection, logistic regression, the DNN evaluator and
//! fold plans, each against an independent oracle.

use augforge_core::classify::{
    evaluate, evaluate_predictions, filter_nonzero_columns, kfold_split, representative_index, rfe, rfe_round,
    run_baseline, train_dnn, train_logistic_regression, Averaging, BaselineConfig, DnnConfig, FeatureMask,
    FeatureSelection, FoldSizes, LrConfig, Variant,
};
use augforge_core::data::{synth_hallam, SynthConfig};
use augforge_core::nncore::Matrix;
use augforge_core::rng::{seeded, standard_normal, Rng};
use augforge_core::Error;
use proptest::prelude::*;
use rand::Rng as _;

/// Per-class (precision, recall, F, support) by direct counting over the
/// samples, for every class seen in either label list.
fn brute_force(y_true: &[usize], y_pred: &[usize], k: usize) -> Vec<(f64, f64, f64, usize)> {
    let mut out = Vec::new();
    for c in 0..k {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        if tp + fp + fn_ == 0 {
            continue;
        }
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        out.push((p, r, f, tp + fn_));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn metrics_match_brute_force(
        k in 2usize..=4,
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..=12),
    ) {
        let y_true: Vec<usize> = pairs.iter().map(|p| p.0 % k).collect();
        let y_pred: Vec<usize> = pairs.iter().map(|p| p.1 % k).collect();
        let classes = brute_force(&y_true, &y_pred, k);
        let n = y_true.len() as f64;

        let m = evaluate_predictions(&y_true, &y_pred, k, Averaging::Macro).unwrap();
        let mean = |i: usize| classes.iter().map(|c| [c.0, c.1, c.2][i]).sum::<f64>() / classes.len() as f64;
        prop_assert_eq!(m.precision, mean(0));
        prop_assert_eq!(m.recall, mean(1));
        prop_assert_eq!(m.f_score, mean(2));
        let macro_f = m.per_class.iter().map(|c| c.f_score).sum::<f64>() / m.per_class.len() as f64;
        prop_assert!((m.f_score - macro_f).abs() <= 1e-12);
        prop_assert_eq!(m.accuracy, y_true.iter().zip(&y_pred).filter(|(t, p)| t == p).count() as f64 / n);

        let w = evaluate_predictions(&y_true, &y_pred, k, Averaging::Weighted).unwrap();
        let wmean = |i: usize| classes.iter().map(|c| c.3 as f64 * [c.0, c.1, c.2][i]).sum::<f64>() / n;
        prop_assert_eq!(w.precision, wmean(0));
        prop_assert_eq!(w.recall, wmean(1));
        prop_assert_eq!(w.f_score, wmean(2));
        for v in [m.precision, m.recall, m.f_score, w.precision, w.recall, w.f_score] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn balanced_sets_average_identically(perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(), preds in prop::collection::vec(0usize..4, 12)) {
        let y_true: Vec<usize> = perm.iter().map(|i| i % 4).collect();
        let a = evaluate_predictions(&y_true, &preds, 4, Averaging::Macro).unwrap();
        let b = evaluate_predictions(&y_true, &preds, 4, Averaging::Weighted).unwrap();
        // Classes predicted but absent from y_true do not exist here, so
        // every class has support 3.
        prop_assert!((a.f_score - b.f_score).abs() <= 1e-12);
        prop_assert!((a.recall - b.recall).abs() <= 1e-12);
    }

    #[test]
    fn nz_mask_matches_column_scan(rows in 1usize..8, cols in 1usize..6, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| if rng.random_bool(0.5) { 0.0 } else { 1.0 }).collect();
        let x = Matrix::from_vec(rows, cols, data).unwrap();
        let expected: Vec<usize> = (0..cols)
            .filter(|&c| 2 * (0..rows).filter(|&r| x.get(r, c) == 0.0).count() <= rows)
            .collect();
        match filter_nonzero_columns(&x, 0.5) {
            Ok(mask) => {
                prop_assert_eq!(&mask.indices, &expected);
                prop_assert!(mask.is_valid());
            }
            Err(Error::EmptyFeatures(_)) => prop_assert!(expected.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn kfold_plan_partitions_and_stratifies(seed in any::<u64>()) {
        let y: Vec<usize> = (0..60).map(|i| i / 15).collect();
        let plan = kfold_split(&y, 4, 5, FoldSizes { train: 40, eval: 8, test: 12 }, seed).unwrap();
        let mut seen = vec![0usize; 60];
        for fold in &plan.folds {
            prop_assert_eq!((fold.train.len(), fold.eval.len(), fold.test.len()), (40, 8, 12));
            for (part, per_class) in [(&fold.train, 10), (&fold.eval, 2), (&fold.test, 3)] {
                for c in 0..4 {
                    prop_assert_eq!(part.iter().filter(|&&r| y[r] == c).count(), per_class);
                }
            }
            let mut all: Vec<usize> = fold.train.iter().chain(&fold.eval).chain(&fold.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..60).collect::<Vec<_>>());
            for &r in &fold.test {
                seen[r] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }
}

#[test]
fn nz_hand_cases() {
    let x = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 3.0, 0.0], [1.0, 4.0, 2.0]]).unwrap();
    let mask = filter_nonzero_columns(&x, 0.5).unwrap();
    assert_eq!(mask.indices, vec![1, 2]);
    let dense = Matrix::filled(3, 4, 2.0);
    assert_eq!(filter_nonzero_columns(&dense, 0.5).unwrap(), FeatureMask::identity(4).with_nz());
}

trait WithNz {
    fn with_nz(self) -> FeatureMask;
}

impl WithNz for FeatureMask {
    fn with_nz(mut self) -> FeatureMask {
        self.provenance = vec![augforge_core::classify::MaskStep::Nz];
        self
    }
}

#[test]
fn kfold_is_deterministic_and_rejects_infeasible_sizes() {
    let y: Vec<usize> = (0..60).map(|i| i / 15).collect();
    let sizes = FoldSizes { train: 40, eval: 8, test: 12 };
    assert_eq!(kfold_split(&y, 4, 5, sizes, 3).unwrap(), kfold_split(&y, 4, 5, sizes, 3).unwrap());
    assert_ne!(kfold_split(&y, 4, 5, sizes, 3).unwrap(), kfold_split(&y, 4, 5, sizes, 4).unwrap());
    let bad = FoldSizes { train: 41, eval: 7, test: 12 };
    assert!(matches!(kfold_split(&y, 4, 5, bad, 0), Err(Error::Config(_))));
}

/// Two informative columns (class means ±1.5) at random positions among
/// eight N(0, 1) noise columns; 40 rows, 2 classes.
fn planted(rng: &mut Rng) -> (Matrix, Vec<usize>, [usize; 2]) {
    let n = 40;
    let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut x = standard_normal(n, 10, rng);
    let a = rng.random_range(0..10);
    let mut b = rng.random_range(0..9);
    if b >= a {
        b += 1;
    }
    for r in 0..n {
        let shift = if y[r] == 0 { -1.5 } else { 1.5 };
        x.set(r, a, x.get(r, a) + shift);
        x.set(r, b, x.get(r, b) + shift);
    }
    (x, y, [a.min(b), a.max(b)])
}

#[test]
fn rfe_recovers_planted_columns() {
    let mut rng = seeded(2024);
    let trials = 20;
    let hits = (0..trials)
        .filter(|_| {
            let (x, y, informative) = planted(&mut rng);
            rfe(&x, &y, 2, 2, &LrConfig::default()).unwrap().indices == informative
        })
        .count();
    assert!(hits >= 19, "{hits}/{trials}");
}

#[test]
fn rfe_rounds_drop_the_smallest_weight_norm() {
    let mut rng = seeded(5);
    let n = 30;
    let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let mut x = standard_normal(n, 3, &mut rng);
    for r in 0..n {
        x.set(r, 0, x.get(r, 0) + y[r] as f64);
        x.set(r, 2, x.get(r, 2) + 0.3 * y[r] as f64);
    }
    let cfg = LrConfig::default();
    let mut columns = vec![0, 1, 2];
    let mut removed = Vec::new();
    while columns.len() > 1 {
        // Exhaustive check: fit on the survivors, pick the minimal row norm.
        let model = train_logistic_regression(&x.select_columns(&columns), &y, 3, &cfg).unwrap();
        let norms: Vec<f64> = (0..columns.len())
            .map(|i| (0..3).map(|c| model.weights.get(i, c).powi(2)).sum::<f64>().sqrt())
            .collect();
        let expected = (0..norms.len()).fold(0, |best, i| if norms[i] < norms[best] { i } else { best });
        assert_eq!(rfe_round(&x, &y, 3, &columns, &cfg).unwrap(), expected);
        removed.push(columns.remove(expected));
    }
    assert_eq!(rfe(&x, &y, 3, 1, &cfg).unwrap().indices, columns);
    assert_eq!(columns, vec![0]);
}

#[test]
fn rfe_drops_constant_columns_first_and_keeps_all_at_full_target() {
    let mut rng = seeded(9);
    let mut x = standard_normal(20, 4, &mut rng);
    for r in 0..20 {
        x.set(r, 2, 7.0);
    }
    let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
    let cfg = LrConfig::default();
    assert_eq!(rfe_round(&x, &y, 2, &[0, 1, 2, 3], &cfg).unwrap(), 2);
    assert_eq!(rfe(&x, &y, 2, 4, &cfg).unwrap().indices, vec![0, 1, 2, 3]);
    assert!(matches!(rfe(&x, &y, 2, 5, &cfg), Err(Error::Config(_))));
}

fn two_clusters(n: usize, rng: &mut Rng) -> (Matrix, Vec<usize>) {
    let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut x = standard_normal(n, 4, rng);
    x.scale(0.3);
    for r in 0..n {
        for c in 0..4 {
            x.set(r, c, x.get(r, c) + if y[r] == 0 { -1.0 } else { 1.0 });
        }
    }
    (x, y)
}

#[test]
fn dnn_separates_two_clusters() {
    let mut rng = seeded(1);
    let (xt, yt) = two_clusters(120, &mut rng);
    let (xe, ye) = two_clusters(40, &mut rng);
    let (xs, ys) = two_clusters(200, &mut rng);
    let model = train_dnn(&xt, &yt, &xe, &ye, 2, &DnnConfig::default()).unwrap();
    let m = evaluate(&model, &xs, &ys, 2, Averaging::Macro).unwrap();
    assert!(m.accuracy >= 0.95, "{}", m.accuracy);
    let p = model.predict_proba(&xs).unwrap();
    assert!(p.row_iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-9));
}

#[test]
fn dnn_early_stopping_contract() {
    let mut rng = seeded(2);
    let (xt, yt) = two_clusters(80, &mut rng);
    let (xe, ye) = two_clusters(40, &mut rng);
    let cfg = DnnConfig { patience: 3, ..Default::default() };
    let model = train_dnn(&xt, &yt, &xe, &ye, 2, &cfg).unwrap();
    assert!(model.best_epoch >= 1 && model.best_epoch <= model.epochs_run());
    assert!((model.loss(&xe, &ye).unwrap() - model.best_eval_loss).abs() <= 1e-9);
    let min = model.history.eval_loss.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(min, model.best_eval_loss);
    if model.epochs_run() < cfg.max_epochs {
        assert_eq!(model.epochs_run(), model.best_epoch + cfg.patience + 1);
    }
}

#[test]
fn dnn_zero_patience_with_worsening_eval_keeps_epoch_one() {
    let mut rng = seeded(3);
    let (xt, yt) = two_clusters(80, &mut rng);
    let (xe, ye) = two_clusters(40, &mut rng);
    // Flipped eval labels: every step that fits the train rows hurts eval.
    let flipped: Vec<usize> = ye.iter().map(|&c| 1 - c).collect();
    let cfg = DnnConfig { patience: 0, dropout: 0.0, ..Default::default() };
    let model = train_dnn(&xt, &yt, &xe, &flipped, 2, &cfg).unwrap();
    assert!(model.history.eval_loss[1] > model.history.eval_loss[0]);
    assert_eq!(model.best_epoch, 1);
    assert_eq!(model.epochs_run(), 2);
    assert!((model.loss(&xe, &flipped).unwrap() - model.history.eval_loss[0]).abs() <= 1e-9);
}

#[test]
fn dnn_is_deterministic_without_dropout() {
    let mut rng = seeded(4);
    let (xt, yt) = two_clusters(60, &mut rng);
    let (xe, ye) = two_clusters(20, &mut rng);
    let cfg = DnnConfig { dropout: 0.0, seed: 8, ..Default::default() };
    let a = train_dnn(&xt, &yt, &xe, &ye, 2, &cfg).unwrap();
    let b = train_dnn(&xt, &yt, &xe, &ye, 2, &cfg).unwrap();
    assert_eq!(
        evaluate(&a, &xe, &ye, 2, Averaging::Macro).unwrap(),
        evaluate(&b, &xe, &ye, 2, Averaging::Macro).unwrap()
    );
    assert_eq!(a.predict_proba(&xe).unwrap(), b.predict_proba(&xe).unwrap());
}

#[test]
fn logistic_rejects_single_class() {
    let x = Matrix::filled(3, 2, 1.0);
    assert!(train_logistic_regression(&x, &[0, 0, 0], 1, &LrConfig::default()).is_err());
}

fn small_synth() -> augforge_core::data::Dataset {
    synth_hallam(&SynthConfig {
        feature_count: 40,
        original_count: 16,
        informative_count: 6,
        zero_heavy_count: 10,
        zero_heavy_original: 4,
        separation: 2.0,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn baseline_table_means_and_representative_fold() {
    let ds = small_synth();
    let cfg = BaselineConfig {
        selection: FeatureSelection { rfe_target: 8, ..Default::default() },
        ..Default::default()
    };
    let table = run_baseline(&ds, &cfg).unwrap();
    assert_eq!(table.rows.len(), 6);
    for row in &table.rows {
        assert_eq!(row.folds.len(), 5);
        let mean_f = row.folds.iter().map(|f| f.f_score).sum::<f64>() / 5.0;
        assert!((row.f_score - mean_f).abs() <= 1e-12);
        let dev = |i: usize| (row.folds[i].f_score - row.f_score).abs();
        assert!((0..5).all(|i| dev(row.representative_fold) <= dev(i)));
        match row.variant {
            Variant::Raw => assert_eq!(row.mean_features, row.input_features as f64),
            Variant::Nz => assert!(row.mean_features < row.input_features as f64),
            Variant::NzRfe => assert_eq!(row.mean_features, 8.0),
        }
    }
}

#[test]
fn rfe_target_at_nz_count_reproduces_nz() {
    let ds = small_synth();
    // With 10 zero-heavy columns out of 40, NZ keeps 30 on every fold.
    let base = BaselineConfig {
        feature_sets: vec!["all".into()],
        variants: vec![Variant::Nz, Variant::NzRfe],
        selection: FeatureSelection { rfe_target: 30, ..Default::default() },
        ..Default::default()
    };
    let table = run_baseline(&ds, &base).unwrap();
    let (nz, rfe_row) = (&table.rows[0], &table.rows[1]);
    assert_eq!(nz.mean_features, 30.0);
    assert_eq!(nz.folds, rfe_row.folds);
    assert_eq!(nz.f_score, rfe_row.f_score);
}

#[test]
fn representative_ties_go_to_lowest_index() {
    assert_eq!(representative_index(&[0.2, 0.4, 0.6, 0.4]), 1);
    assert_eq!(representative_index(&[0.0, 1.0]), 0);
}
