use std::path::{Path, PathBuf};

use augforge_core::augment::DnnEvaluator;
use augforge_core::classify::{FeatureSelection, FoldSizes, Variant};
use augforge_core::data::SynthConfig;
use augforge_core::genmodels::{ModelKind, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "AUGFORGE_SEED";

pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Directory holding the four uncompressed MNIST IDX files.
    Idx { dir: PathBuf },
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default = "default_delimiter")]
        delimiter: char,
    },
    Synth(SynthConfig),
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSpec {
    /// Stratified per-class subset of the MNIST train set; the full test set.
    Mnist {
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_eval_fraction")]
        eval_fraction: f64,
    },
    /// Stratified k-fold plan; augmentation runs on one fold, restricted to
    /// the columns selected on that fold.
    Folds {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_sizes")]
        sizes: FoldSizes,
        #[serde(default = "default_feature_set")]
        feature_set: String,
        #[serde(default = "default_variant")]
        variant: Variant,
        /// Fold to augment; defaults to the representative fold.
        #[serde(default)]
        fold: Option<usize>,
    },
}

fn default_per_class() -> usize {
    150
}
fn default_eval_fraction() -> f64 {
    0.1
}
fn default_k() -> usize {
    5
}
fn default_sizes() -> FoldSizes {
    FoldSizes { train: 40, eval: 8, test: 12 }
}
fn default_feature_set() -> String {
    "all".into()
}
fn default_variant() -> Variant {
    Variant::NzRfe
}

/// LR baseline settings. With a fold split every (feature set, variant)
/// pair is cross-validated; with the MNIST split LR runs once on raw pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub feature_sets: Vec<String>,
    pub variants: Vec<Variant>,
    pub selection: FeatureSelection,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec {
            feature_sets: vec!["original".into(), "all".into()],
            variants: vec![Variant::Raw, Variant::Nz, Variant::NzRfe],
            selection: FeatureSelection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub split: SplitSpec,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Reconstruction iterations per model.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub gated: bool,
    #[serde(default)]
    pub generative: TrainConfig,
    #[serde(default)]
    pub classifier: DnnEvaluator,
    #[serde(default)]
    pub baseline: BaselineSpec,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}
fn default_n() -> usize {
    20
}

/// `augforge synth` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCommandConfig {
    #[serde(default)]
    pub synth: SynthConfig,
    /// CSV destination; a JSON sidecar is written next to it.
    pub output: PathBuf,
}

/// Parses JSON, reporting the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(format!("{what}: {inner}"))
        } else {
            CliError::Config(format!("{what}: field `{path}`: {inner}"))
        }
    })
}

fn read_config_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Value of `AUGFORGE_SEED`, if set.
pub fn seed_override() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Relative paths in a config resolve against the config file's directory.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Reads, validates, applies the seed override and resolves paths.
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg: ExperimentConfig = parse_json(&read_config_text(path)?, &path.display().to_string())?;
        if let Some(seed) = seed_override()? {
            cfg.seed = seed;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output_dir = resolve(base, &cfg.output_dir);
        match &mut cfg.dataset {
            DatasetSource::Idx { dir } => *dir = resolve(base, dir),
            DatasetSource::Csv { path, .. } => *path = resolve(base, path),
            DatasetSource::Synth(_) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n == 0 {
            return bad("`n` must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("`models` must list at least one model".into());
        }
        let mut seen = Vec::new();
        for m in &self.models {
            if seen.contains(m) {
                return bad(format!("`models` lists {m} twice"));
            }
            seen.push(*m);
        }
        match (&self.dataset, &self.split) {
            (DatasetSource::Idx { .. }, SplitSpec::Folds { .. }) => {
                return bad("`split.folds` needs a csv or synth dataset".into());
            }
            (DatasetSource::Csv { .. } | DatasetSource::Synth(_), SplitSpec::Mnist { .. }) => {
                return bad("`split.mnist` needs an idx dataset".into());
            }
            _ => {}
        }
        if let DatasetSource::Csv { delimiter, .. } = &self.dataset {
            if !delimiter.is_ascii() {
                return bad(format!("`dataset.csv.delimiter` {delimiter:?} is not ASCII"));
            }
        }
        if let DatasetSource::Synth(s) = &self.dataset {
            s.validate().map_err(|e| CliError::Config(format!("`dataset.synth`: {e}")))?;
        }
        if let SplitSpec::Mnist { per_class, eval_fraction } = &self.split {
            if *per_class == 0 || !(0.0..1.0).contains(eval_fraction) {
                return bad("`split.mnist` needs per_class ≥ 1 and eval_fraction in [0, 1)".into());
            }
        }
        if let SplitSpec::Folds {
            k, feature_set, variant, fold, ..
        } = &self.split
        {
            if fold.is_some_and(|f| f >= *k) {
                return bad(format!("`split.folds.fold` must be below k = {k}"));
            }
            if !self.baseline.feature_sets.contains(feature_set) || !self.baseline.variants.contains(variant) {
                return bad(format!(
                    "`split.folds` augments ({feature_set}, {variant}), which `baseline` does not evaluate"
                ));
            }
        }
        self.classifier
            .config
            .validate()
            .map_err(|e| CliError::Config(format!("`classifier.config`: {e}")))?;
        Ok(())
    }
}

impl SynthCommandConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg: SynthCommandConfig = parse_json(&read_config_text(path)?, &path.display().to_string())?;
        if let Some(seed) = seed_override()? {
            cfg.synth.seed = seed;
        }
        cfg.output = resolve(path.parent().unwrap_or(Path::new(".")), &cfg.output);
        cfg.synth
            .validate()
            .map_err(|e| CliError::Config(format!("`synth`: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_nested_key_names_its_path() {
        let text = r#"{"dataset": {"synth": {"separaton": 1}}, "split": {"folds": {}}, "output_dir": "o"}"#;
        let err = parse_json::<ExperimentConfig>(text, "cfg").unwrap_err();
        assert!(err.to_string().contains("dataset.synth"), "{err}");
        assert!(err.to_string().contains("separaton"), "{err}");
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"{"dataset": {"synth": {}}, "split": {"folds": {}}, "output_dir": "o"}"#;
        let cfg: ExperimentConfig = parse_json(text, "cfg").unwrap();
        assert_eq!(cfg.n, 20);
        assert_eq!(cfg.models, ModelKind::ALL.to_vec());
        cfg.validate().unwrap();
    }

    #[test]
    fn mismatched_split_rejected() {
        let text = r#"{"dataset": {"idx": {"dir": "d"}}, "split": {"folds": {}}, "output_dir": "o"}"#;
        let cfg: ExperimentConfig = parse_json(text, "cfg").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
