//! Loaders, the MNIST subset, normalization and the synthetic surrogate.

use std::path::{Path, PathBuf};

use augforge_core::classify::filter_nonzero_columns;
use augforge_core::data::{
    load_csv, load_dataset, load_idx, normalize, parse_idx, read_idx_images, save_csv, subset_mnist, synth_hallam,
    write_idx_images, write_idx_labels, Dataset, NormalizationMethod, NormalizationRecord, SynthConfig,
    IDX_IMAGES_MAGIC,
};
use augforge_core::nncore::Matrix;
use augforge_core::rng::{seeded, standard_normal};
use augforge_core::Error;
use proptest::prelude::*;

fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("AUGFORGE_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

/// `count` 2×2 images with labels `i % classes`; pixel 0 of image 0 is 255.
fn idx_fixture(dir: &Path, count: usize, classes: u8) -> (PathBuf, PathBuf) {
    let mut pixels: Vec<u8> = (0..count * 4).map(|i| (i * 7 % 251) as u8).collect();
    pixels[0] = 255;
    let labels: Vec<u8> = (0..count).map(|i| i as u8 % classes).collect();
    let (img, lab) = (dir.join("img"), dir.join("lab"));
    write_idx_images(&img, count, 2, 2, &pixels).unwrap();
    write_idx_labels(&lab, &labels).unwrap();
    (img, lab)
}

#[test]
fn idx_single_image_scales_to_unit() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = idx_fixture(dir.path(), 1, 1);
    let ds = load_idx(&img, &lab).unwrap();
    assert_eq!(ds.x.shape(), (1, 4));
    assert_eq!(ds.x.get(0, 0), 1.0);
    assert_eq!(ds.y, vec![0]);
}

#[test]
fn idx_write_read_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pixels: Vec<u8> = (0..3 * 28 * 28).map(|i| (i % 256) as u8).collect();
    let p = dir.path().join("x");
    write_idx_images(&p, 3, 28, 28, &pixels).unwrap();
    let arr = read_idx_images(&p).unwrap();
    assert_eq!(arr.dims, vec![3, 28, 28]);
    assert_eq!(arr.data, pixels);
}

#[test]
fn idx_count_mismatch_is_consistency_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = idx_fixture(dir.path(), 3, 2);
    let lab = dir.path().join("short");
    write_idx_labels(&lab, &[0, 1]).unwrap();
    assert!(matches!(load_idx(&img, &lab), Err(Error::Consistency(_))));
}

#[test]
fn idx_truncated_header_reports_offset() {
    let bytes = IDX_IMAGES_MAGIC.to_be_bytes();
    match parse_idx(&bytes, IDX_IMAGES_MAGIC) {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn standard_mnist_files_have_documented_counts() {
    let Some(dir) = mnist_dir() else {
        eprintln!("MNIST files not found; skipping (set AUGFORGE_MNIST_DIR)");
        return;
    };
    let train = load_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte")).unwrap();
    let test = load_idx(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte")).unwrap();
    assert_eq!(train.x.shape(), (60_000, 784));
    assert_eq!(test.x.shape(), (10_000, 784));
    assert_eq!(train.num_classes(), 10);
    assert!(train.x.data().iter().all(|v| (0.0..=1.0).contains(v)));

    let split = subset_mnist(&train, &test, 150, 0.1, 7).unwrap();
    assert_eq!((split.x_train.rows(), split.x_eval.rows(), split.x_test.rows()), (1350, 150, 10_000));
    let mut per_digit = [0usize; 10];
    for &c in split.y_train.iter().chain(&split.y_eval) {
        per_digit[c] += 1;
    }
    assert_eq!(per_digit, [150; 10]);
    let again = subset_mnist(&train, &test, 150, 0.1, 7).unwrap();
    assert_eq!(split.ids_train, again.ids_train);
    assert_eq!(split.ids_eval, again.ids_eval);
}

/// Small stand-in for the MNIST train/test pair.
fn fake_mnist(per_class: usize) -> (Dataset, Dataset) {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = idx_fixture(dir.path(), per_class * 10, 10);
    let train = load_idx(&img, &lab).unwrap();
    let test = train.select_rows(&[0, 1, 2]);
    (train, test)
}

#[test]
fn subset_is_stratified_and_seeded() {
    let (train, test) = fake_mnist(20);
    let split = subset_mnist(&train, &test, 10, 0.2, 1).unwrap();
    assert_eq!(split.x_train.rows(), 80);
    assert_eq!(split.x_eval.rows(), 20);
    for c in 0..10 {
        assert_eq!(split.y_eval.iter().filter(|&&y| y == c).count(), 2);
        assert_eq!(split.y_train.iter().filter(|&&y| y == c).count(), 8);
    }
    split.validate_disjoint().unwrap();
    let other = subset_mnist(&train, &test, 10, 0.2, 2).unwrap();
    assert_ne!(split.ids_train, other.ids_train);
}

#[test]
fn subset_rejects_too_many_per_class() {
    let (train, test) = fake_mnist(5);
    assert!(matches!(subset_mnist(&train, &test, 6, 0.2, 0), Err(Error::Config(_))));
}

#[test]
fn csv_round_trip_keeps_values_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_hallam(&SynthConfig {
        feature_count: 30,
        original_count: 10,
        informative_count: 4,
        zero_heavy_count: 6,
        zero_heavy_original: 2,
        ..Default::default()
    })
    .unwrap();
    let p = dir.path().join("s.csv");
    save_csv(&ds, &p).unwrap();
    let back = load_dataset(&p).unwrap();
    assert_eq!(back.y, ds.y);
    assert_eq!(back.class_names, ds.class_names);
    assert_eq!(back.column_names, ds.column_names);
    assert_eq!(back.feature_sets, ds.feature_sets);
    assert_eq!(back.seed, ds.seed);
    for (a, b) in back.x.data().iter().zip(ds.x.data()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn csv_ragged_row_reports_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "a,b,label\n1,2,x\n3,oops,y\n").unwrap();
    match load_csv(&p, "label", b',') {
        Err(Error::Table { row, column, .. }) => assert_eq!((row, column), (2, 1)),
        other => panic!("expected table error, got {other:?}"),
    }
    std::fs::write(&p, "a,b,label\n1,2,x\n3,y\n").unwrap();
    assert!(matches!(load_csv(&p, "label", b','), Err(Error::Table { row: 2, .. })));
    assert!(matches!(load_csv(&p, "nope", b','), Err(Error::Config(_))));
}

#[test]
fn normalize_endpoints_clamp_and_inverse() {
    let x = Matrix::from_rows(&[[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]).unwrap();
    let ds = Dataset::new(x, vec![0, 1, 0], vec!["a".into(), "b".into()], vec!["c0".into(), "c1".into()]).unwrap();
    let (scaled, record) = normalize(&ds, NormalizationMethod::Minmax, &[0, 1]).unwrap();
    assert_eq!(scaled.x.column(0), vec![0.0, 1.0, 1.0]);
    assert_eq!(scaled.x.column(1), vec![0.0, 0.0, 0.0]);
    assert_eq!(record.constant_columns(), vec![1]);
    assert_eq!(record.fit_ids, vec![0, 1]);
    let inv = record.inverse(&scaled.x.select_rows(&[0, 1])).unwrap();
    assert!((inv.get(0, 0) - 2.0).abs() < 1e-12 && (inv.get(1, 0) - 4.0).abs() < 1e-12);
}

#[test]
fn synth_default_shape_and_balance() {
    let ds = synth_hallam(&SynthConfig::default()).unwrap();
    assert_eq!(ds.x.shape(), (60, 324));
    assert_eq!(ds.class_counts(), vec![15; 4]);
    assert_eq!(ds.class_names, vec!["FMD", "ND", "MCI", "HC"]);
    assert_eq!(ds.feature_set("original").unwrap().len(), 78);
}

#[test]
fn synth_zero_heavy_columns_are_exactly_the_nz_removals() {
    let cfg = SynthConfig::default();
    let ds = synth_hallam(&cfg).unwrap();
    let (_, zero_heavy) = cfg.layout();
    let mask = filter_nonzero_columns(&ds.x, 0.5).unwrap();
    let removed: Vec<usize> = (0..ds.num_features()).filter(|c| !mask.indices.contains(c)).collect();
    assert_eq!(removed, zero_heavy);
    assert_eq!(mask.len(), 261);
    let original = ds.feature_set("original").unwrap();
    let orig_nz = filter_nonzero_columns(&ds.x.select_columns(&original), 0.5).unwrap();
    assert_eq!(orig_nz.len(), 64);
}

#[test]
fn synth_separation_zero_has_shared_class_means() {
    let cfg = SynthConfig {
        separation: 0.0,
        samples_per_class: 2000,
        ..Default::default()
    };
    let ds = synth_hallam(&cfg).unwrap();
    let (informative, _) = cfg.layout();
    for &col in &informative {
        for c in 0..4 {
            let vals: Vec<f64> = (0..ds.len()).filter(|&r| ds.y[r] == c).map(|r| ds.x.get(r, col)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 0.1, "class {c} column {col} mean {mean}");
        }
    }
}

#[test]
fn synth_informative_columns_follow_the_simplex() {
    let cfg = SynthConfig {
        separation: 3.0,
        samples_per_class: 4000,
        ..Default::default()
    };
    let ds = synth_hallam(&cfg).unwrap();
    let (informative, _) = cfg.layout();
    let mean = |c: usize, col: usize| {
        let v: Vec<f64> = (0..ds.len()).filter(|&r| ds.y[r] == c).map(|r| ds.x.get(r, col)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    // Every triple of informative columns puts the class centroids on a
    // sphere of radius `separation`.
    for triple in informative.chunks(3) {
        for c in 0..4 {
            let r2: f64 = triple.iter().map(|&col| mean(c, col).powi(2)).sum();
            assert!((r2.sqrt() - 3.0).abs() < 0.1, "radius {}", r2.sqrt());
        }
    }
}

#[test]
fn synth_is_deterministic() {
    let cfg = SynthConfig { seed: 11, ..Default::default() };
    let a = synth_hallam(&cfg).unwrap();
    let b = synth_hallam(&cfg).unwrap();
    assert!(a.x.data().iter().zip(b.x.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    let c = synth_hallam(&SynthConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.x, c.x);
}

#[test]
fn synth_rejects_bad_zero_fraction() {
    let cfg = SynthConfig { zero_fraction: 0.5, ..Default::default() };
    assert!(matches!(synth_hallam(&cfg), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minmax_inverse_round_trips_fit_rows(seed in any::<u64>(), rows in 2usize..12, cols in 1usize..6) {
        let mut rng = seeded(seed);
        let x = standard_normal(rows, cols, &mut rng).map(|v| 10.0 * v);
        let fit: Vec<usize> = (0..rows).collect();
        for method in [NormalizationMethod::Minmax, NormalizationMethod::Zscore] {
            let rec = NormalizationRecord::fit(&x, &fit, fit.clone(), method).unwrap();
            let y = rec.apply(&x).unwrap();
            if method == NormalizationMethod::Minmax {
                prop_assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let back = rec.inverse(&y).unwrap();
            for (a, b) in back.data().iter().zip(x.data()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn csv_labels_factorize_densely(labels in prop::collection::vec(0u8..5, 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut text = String::from("v,cls\n");
        for (i, l) in labels.iter().enumerate() {
            text.push_str(&format!("{i},L{l}\n"));
        }
        std::fs::write(&p, text).unwrap();
        let ds = load_csv(&p, "cls", b',').unwrap();
        prop_assert!(ds.y.iter().all(|&c| c < ds.num_classes()));
        for (i, l) in labels.iter().enumerate() {
            prop_assert_eq!(&ds.class_names[ds.y[i]], &format!("L{l}"));
        }
        // Ids follow first appearance.
        let mut seen = Vec::new();
        for &c in &ds.y {
            if !seen.contains(&c) {
                prop_assert_eq!(c, seen.len());
                seen.push(c);
            }
        }
    }
}
