use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use augforge_core::augment::{run_augmentation_with, unaugmented_scores, AugmentOptions, AugmentationResult, ModelTrainer, Split};
use augforge_core::classify::{
    fold_split, lr_on_split, run_baseline, BaselineConfig, BaselineTable, FoldResult, Variant, VariantRow,
};
use augforge_core::data::{load_csv, load_dataset, load_idx, read_sidecar, subset_mnist, synth_hallam, Dataset};
use augforge_core::genmodels::ModelKind;
use rayon::prelude::*;

use crate::config::{DatasetSource, ExperimentConfig, SplitSpec, MNIST_FILES};
use crate::error::{CliError, CliResult, Stage};
use crate::plot::{render_svg, series_from_trace, Metric};
use crate::report::{BaselineSummary, BestRow, DataSummary, ModelRun, RunReport, Timing, REPORT_FORMAT, REPORT_VERSION};

pub const CONFIG_ECHO: &str = "config.json";
pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PLOT_FILE: &str = "fscore_vs_reconstructions.svg";
pub const BASELINE_CSV: &str = "baseline.csv";
pub const BASELINE_JSON: &str = "baseline.json";

enum Loaded {
    Mnist { train: Dataset, test: Dataset },
    Table(Dataset),
}

fn load(cfg: &ExperimentConfig) -> CliResult<Loaded> {
    match &cfg.dataset {
        DatasetSource::Idx { dir } => {
            let [tri, trl, tei, tel] = MNIST_FILES.map(|f| dir.join(f));
            for p in [&tri, &trl, &tei, &tel] {
                if !p.exists() {
                    return Err(CliError::Config(format!(
                        "{} not found (run `augforge fetch-mnist {}`)",
                        p.display(),
                        dir.display()
                    )));
                }
            }
            Ok(Loaded::Mnist {
                train: load_idx(&tri, &trl).stage("load")?,
                test: load_idx(&tei, &tel).stage("load")?,
            })
        }
        DatasetSource::Csv {
            path,
            label_column,
            delimiter,
        } => {
            let sidecar = read_sidecar(path).stage("load")?;
            let ds = match sidecar {
                Some(s) if s.label_column == *label_column && *delimiter == ',' => load_dataset(path),
                _ => load_csv(path, label_column, *delimiter as u8),
            };
            Ok(Loaded::Table(ds.stage("load")?))
        }
        DatasetSource::Synth(s) => Ok(Loaded::Table(synth_hallam(s).stage("load")?)),
    }
}

fn baseline_config(cfg: &ExperimentConfig, k: usize, sizes: augforge_core::classify::FoldSizes) -> BaselineConfig {
    BaselineConfig {
        k,
        sizes,
        feature_sets: cfg.baseline.feature_sets.clone(),
        variants: cfg.baseline.variants.clone(),
        selection: cfg.baseline.selection.clone(),
        averaging: cfg.classifier.averaging,
        seed: cfg.seed,
    }
}

/// The split the models work on, plus the LR baseline.
pub struct Prepared {
    pub split: Split,
    pub data: DataSummary,
    pub lr_eval_f: f64,
    pub lr_test_f: f64,
    pub table: BaselineTable,
}

/// Loads the dataset, builds the split and runs the LR baseline.
pub fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    match (load(cfg)?, &cfg.split) {
        (Loaded::Mnist { train, test }, SplitSpec::Mnist { per_class, eval_fraction }) => {
            let split = subset_mnist(&train, &test, *per_class, *eval_fraction, cfg.seed).stage("split")?;
            let (eval, test_m) = lr_on_split(&split, &cfg.baseline.selection.lr, cfg.classifier.averaging).stage("baseline")?;
            let fold = FoldResult {
                fold: 0,
                features: split.num_features(),
                precision: test_m.precision,
                recall: test_m.recall,
                f_score: test_m.f_score,
                eval_f_score: eval.f_score,
                mask: (0..split.num_features()).collect(),
            };
            let table = BaselineTable {
                k: 1,
                averaging: cfg.classifier.averaging,
                rows: vec![VariantRow {
                    feature_set: "all".into(),
                    variant: Variant::Raw,
                    input_features: split.num_features(),
                    mean_features: split.num_features() as f64,
                    precision: test_m.precision,
                    recall: test_m.recall,
                    f_score: test_m.f_score,
                    folds: vec![fold],
                    representative_fold: 0,
                }],
            };
            Ok(Prepared {
                data: DataSummary {
                    class_names: train.class_names.clone(),
                    columns: train.column_names.clone(),
                    train_rows: split.x_train.rows(),
                    eval_rows: split.x_eval.rows(),
                    test_rows: split.x_test.rows(),
                    fold: None,
                },
                split,
                lr_eval_f: eval.f_score,
                lr_test_f: test_m.f_score,
                table,
            })
        }
        (
            Loaded::Table(ds),
            SplitSpec::Folds {
                k,
                sizes,
                feature_set,
                variant,
                fold,
            },
        ) => {
            let bcfg = baseline_config(cfg, *k, *sizes);
            let table = run_baseline(&ds, &bcfg).stage("baseline")?;
            let row = table
                .rows
                .iter()
                .find(|r| r.feature_set == *feature_set && r.variant == *variant)
                .expect("validated: the augmented pair is in the baseline");
            let chosen = fold.unwrap_or(row.representative_fold);
            let result = &row.folds[chosen];
            let split = fold_split(&ds, &bcfg, chosen, &result.mask).stage("split")?;
            Ok(Prepared {
                data: DataSummary {
                    class_names: ds.class_names.clone(),
                    columns: result.mask.iter().map(|&c| ds.column_names[c].clone()).collect(),
                    train_rows: split.x_train.rows(),
                    eval_rows: split.x_eval.rows(),
                    test_rows: split.x_test.rows(),
                    fold: Some(chosen),
                },
                split,
                lr_eval_f: result.eval_f_score,
                lr_test_f: result.f_score,
                table: table.clone(),
            })
        }
        _ => Err(CliError::Config("dataset and split kinds do not match".into())),
    }
}

/// One model's augmentation loop under `cfg`.
pub fn run_model(cfg: &ExperimentConfig, split: &Split, kind: ModelKind) -> CliResult<AugmentationResult> {
    let trainer = ModelTrainer {
        kind,
        config: cfg.generative.clone(),
    };
    let options = AugmentOptions {
        n: cfg.n,
        seed: cfg.seed,
        gated: cfg.gated,
    };
    run_augmentation_with(split, &trainer, &cfg.classifier, options).stage("augment")
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime("report", e))?;
    std::fs::write(path, text + "\n").stage("report")
}

fn create_output_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime("setup", format!("{}: {e}", dir.display())))
}

/// Paths of the per-model trace files under `output_dir`.
pub fn trace_path(output_dir: &Path, kind: ModelKind) -> PathBuf {
    output_dir.join(kind.slug()).join(TRACE_FILE)
}

/// `augforge run`: config echo, LR and DNN baselines, one augmentation
/// loop per model, then `report.json`, per-model `trace.csv` and the plot.
pub fn cmd_run(cfg: &ExperimentConfig, parallel: bool) -> CliResult<RunReport> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    create_output_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(CONFIG_ECHO), cfg)?;

    let prepared = prepare(cfg)?;
    let (dnn_eval_f, dnn_test_f) = unaugmented_scores(&prepared.split, &cfg.classifier, cfg.seed).stage("baseline")?;

    let one = |kind: ModelKind| -> CliResult<(ModelRun, f64)> {
        let t = Instant::now();
        let result = run_model(cfg, &prepared.split, kind)?;
        let dir = cfg.output_dir.join(kind.slug());
        create_output_dir(&dir)?;
        result.write_trace_csv(&dir.join(TRACE_FILE)).stage("report")?;
        Ok((ModelRun { model: kind, result }, t.elapsed().as_secs_f64()))
    };
    let outcomes: Vec<CliResult<(ModelRun, f64)>> = if parallel {
        cfg.models.par_iter().map(|&k| one(k)).collect()
    } else {
        cfg.models.iter().map(|&k| one(k)).collect()
    };
    let mut runs = Vec::new();
    let mut model_seconds = BTreeMap::new();
    for outcome in outcomes {
        let (run, secs) = outcome?;
        model_seconds.insert(run.model.name().to_string(), secs);
        runs.push(run);
    }

    let best = runs.iter().map(|r| BestRow::from_result(r.model, &r.result)).collect();
    let series = runs
        .iter()
        .map(|r| {
            let rows = augforge_core::augment::parse_trace_csv(&r.result.trace_csv()).stage("report")?;
            series_from_trace(r.model.name(), &rows, Metric::Test)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let svg = render_svg(&series, "DNN test F-score vs reconstructions", Some(100.0 * dnn_test_f))?;
    std::fs::write(cfg.output_dir.join(PLOT_FILE), svg).stage("report")?;

    let report = RunReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        config: cfg.clone(),
        data: prepared.data,
        baseline: BaselineSummary {
            lr_eval_f: prepared.lr_eval_f,
            lr_test_f: prepared.lr_test_f,
            table: matches!(cfg.split, SplitSpec::Folds { .. }).then_some(prepared.table),
            dnn_eval_f,
            dnn_test_f,
        },
        runs,
        best,
        versions: BTreeMap::from([("augforge".to_string(), env!("CARGO_PKG_VERSION").to_string())]),
        timing: Timing {
            started_unix,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            model_seconds,
        },
    };
    write_json(&cfg.output_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// `augforge baseline`: the LR table as CSV and JSON.
pub fn cmd_baseline(cfg: &ExperimentConfig) -> CliResult<BaselineTable> {
    create_output_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join(CONFIG_ECHO), cfg)?;
    let prepared = prepare(cfg)?;
    prepared.table.write_csv(&cfg.output_dir.join(BASELINE_CSV)).stage("report")?;
    write_json(&cfg.output_dir.join(BASELINE_JSON), &prepared.table)?;
    Ok(prepared.table)
}

/// `augforge synth`: writes the surrogate dataset as CSV plus sidecar.
pub fn cmd_synth(cfg: &crate::config::SynthCommandConfig) -> CliResult<Dataset> {
    let ds = synth_hallam(&cfg.synth).stage("synth")?;
    if let Some(parent) = cfg.output.parent() {
        create_output_dir(parent)?;
    }
    augforge_core::data::save_csv(&ds, &cfg.output).stage("synth")?;
    Ok(ds)
}

/// `augforge plot`: one series per trace file.
pub fn cmd_plot(traces: &[PathBuf], out: &Path, baseline: Option<f64>, metric: Metric, title: &str) -> CliResult<()> {
    if traces.is_empty() {
        return Err(CliError::Config("plot needs at least one trace file".into()));
    }
    let series = crate::plot::load_series(traces, metric)?;
    let svg = render_svg(&series, title, baseline)?;
    std::fs::write(out, svg).map_err(|e| CliError::runtime("plot", format!("{}: {e}", out.display())))
}
