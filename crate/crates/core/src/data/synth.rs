use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{seeded, shuffle, standard_normal};

/// Regular tetrahedron on the unit sphere; row `c` is the centroid
/// direction of class `c`.
const SIMPLEX: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Parameters of the synthetic clinical-scale surrogate.
///
/// Columns are laid out as an `original` block (`original_count` columns)
/// followed by an `extended` block. Each block starts with its informative
/// columns, then its zero-heavy columns; the rest is N(0, σ²) noise.
/// Informative columns are split between the blocks, the original block
/// taking the larger half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub samples_per_class: usize,
    pub class_names: Vec<String>,
    pub feature_count: usize,
    pub original_count: usize,
    pub informative_count: usize,
    /// Distance of each class centroid from the origin, in units of `noise_sd`.
    pub separation: f64,
    pub noise_sd: f64,
    pub zero_heavy_count: usize,
    /// How many of the zero-heavy columns fall in the original block.
    pub zero_heavy_original: usize,
    /// Exact fraction of zero entries in each zero-heavy column.
    pub zero_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            samples_per_class: 15,
            class_names: ["FMD", "ND", "MCI", "HC"].map(String::from).to_vec(),
            feature_count: 324,
            original_count: 78,
            informative_count: 12,
            separation: 1.0,
            noise_sd: 1.0,
            zero_heavy_count: 63,
            zero_heavy_original: 14,
            zero_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn informative_split(&self) -> (usize, usize) {
        let orig = self.informative_count.div_ceil(2);
        (orig, self.informative_count - orig)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.samples_per_class == 0 || self.feature_count == 0 {
            return bad("samples_per_class and feature_count must be positive".into());
        }
        if !(2..=4).contains(&self.class_names.len()) {
            return bad(format!("{} classes requested; the simplex layout supports 2 to 4", self.class_names.len()));
        }
        if self.original_count > self.feature_count {
            return bad("original_count exceeds feature_count".into());
        }
        if !(self.zero_fraction > 0.5 && self.zero_fraction <= 1.0) {
            return bad(format!("zero_fraction {} outside (0.5, 1]", self.zero_fraction));
        }
        if !(self.separation >= 0.0) || !(self.noise_sd > 0.0) {
            return bad("separation must be ≥ 0 and noise_sd > 0".into());
        }
        let (inf_orig, inf_ext) = self.informative_split();
        let ext_count = self.feature_count - self.original_count;
        if self.zero_heavy_original > self.zero_heavy_count
            || inf_orig + self.zero_heavy_original > self.original_count
            || inf_ext + (self.zero_heavy_count - self.zero_heavy_original) > ext_count
        {
            return bad("informative and zero-heavy columns do not fit in their blocks".into());
        }
        Ok(())
    }

    /// `(informative, zero_heavy)` column indices.
    pub fn layout(&self) -> (Vec<usize>, Vec<usize>) {
        let (inf_orig, inf_ext) = self.informative_split();
        let zh_orig = self.zero_heavy_original;
        let zh_ext = self.zero_heavy_count - zh_orig;
        let o = self.original_count;
        let informative = (0..inf_orig).chain(o..o + inf_ext).collect();
        let zero_heavy = (inf_orig..inf_orig + zh_orig)
            .chain(o + inf_ext..o + inf_ext + zh_ext)
            .collect();
        (informative, zero_heavy)
    }
}

/// Deterministic stand-in for a small 4-class clinical feature table.
///
/// Informative column `j` (the `j`-th informative column) has class mean
/// `separation · noise_sd · SIMPLEX[c][j mod 3] / √3`, so every triple of
/// informative columns places the class centroids on a regular tetrahedron
/// of radius `separation · noise_sd`. Zero-heavy columns hold exactly
/// `round(zero_fraction · N)` zeros; their other entries are `0.5 + |z|`.
/// Rows are class-major with sample ids `0..N`.
pub fn synth_hallam(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let k = cfg.class_names.len();
    let n = k * cfg.samples_per_class;
    let f = cfg.feature_count;
    let mut rng = seeded(cfg.seed);
    let noise = standard_normal(n, f, &mut rng);
    let (informative, zero_heavy) = cfg.layout();
    let mut x = noise.clone();
    x.data_mut().iter_mut().for_each(|v| *v *= cfg.noise_sd);
    let y: Vec<usize> = (0..n).map(|r| r / cfg.samples_per_class).collect();

    let radius = cfg.separation * cfg.noise_sd / 3f64.sqrt();
    for (j, &col) in informative.iter().enumerate() {
        for r in 0..n {
            let centroid = radius * SIMPLEX[y[r]][j % 3];
            x.set(r, col, x.get(r, col) + centroid);
        }
    }
    let zeros = (cfg.zero_fraction * n as f64).round() as usize;
    for &col in &zero_heavy {
        let mut rows: Vec<usize> = (0..n).collect();
        shuffle(&mut rows, &mut rng);
        for (i, &r) in rows.iter().enumerate() {
            let v = if i < zeros { 0.0 } else { 0.5 + noise.get(r, col).abs() };
            x.set(r, col, v);
        }
    }

    let column_names = (0..f)
        .map(|c| {
            if c < cfg.original_count {
                format!("orig_{c:03}")
            } else {
                format!("ext_{:03}", c - cfg.original_count)
            }
        })
        .collect();
    let mut ds = Dataset::new(x, y, cfg.class_names.clone(), column_names)?;
    ds.seed = Some(cfg.seed);
    ds.feature_sets.insert("original".into(), (0..cfg.original_count).collect());
    ds.feature_sets.insert("extended".into(), (cfg.original_count..f).collect());
    ds.feature_sets.insert("informative".into(), informative);
    ds.feature_sets.insert("zero_heavy".into(), zero_heavy);
    ds.validate()?;
    Ok(ds)
}
