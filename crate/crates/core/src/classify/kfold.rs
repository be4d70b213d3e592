use serde::{Deserialize, Serialize};

use crate::augment::Split;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, shuffle};

/// Per-fold partition sizes; they must add up to the dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSizes {
    pub train: usize,
    pub eval: usize,
    pub test: usize,
}

/// Row positions (into the source dataset) of one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    pub fn split(&self, dataset: &Dataset) -> Result<Split> {
        Split::from_datasets(
            &dataset.select_rows(&self.train),
            &dataset.select_rows(&self.eval),
            &dataset.select_rows(&self.test),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub sizes: FoldSizes,
    pub folds: Vec<Fold>,
}

/// How many of `class_count` rows go to a part of `part` rows out of `n`,
/// if that number is an integer.
fn exact_share(class_count: usize, part: usize, n: usize) -> Option<usize> {
    (class_count * part % n == 0).then_some(class_count * part / n)
}

/// Stratified k-fold plan: the test sets partition the data, and every
/// part of every fold holds each class in exactly the dataset's
/// proportions. Each class's rows are shuffled once and cut into `k` test
/// chunks; the rest of the class is reshuffled per fold and split into
/// eval then train.
pub fn kfold_split(y: &[usize], num_classes: usize, k: usize, sizes: FoldSizes, seed: u64) -> Result<FoldPlan> {
    let n = y.len();
    if k == 0 || k * sizes.test != n || sizes.train + sizes.eval + sizes.test != n {
        return Err(Error::Config(format!(
            "fold sizes {}/{}/{} with k = {k} do not tile {n} samples",
            sizes.train, sizes.eval, sizes.test
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (r, &c) in y.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::InvalidInput(format!("label {c} outside [0, {num_classes})")));
        }
        by_class[c].push(r);
    }
    let mut shares = Vec::with_capacity(num_classes);
    for (c, rows) in by_class.iter().enumerate() {
        let (Some(t), Some(e)) = (exact_share(rows.len(), sizes.test, n), exact_share(rows.len(), sizes.eval, n)) else {
            return Err(Error::Config(format!(
                "class {c} ({} samples) cannot be split in exact proportion into {}/{}/{}",
                rows.len(),
                sizes.train,
                sizes.eval,
                sizes.test
            )));
        };
        shares.push((t, e));
    }
    let mut rng = seeded(seed);
    for rows in &mut by_class {
        shuffle(rows, &mut rng);
    }
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let mut fold_rng = seeded(derive_seed(seed, f as u64 + 1));
        let (mut train, mut eval, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for (rows, &(t, e)) in by_class.iter().zip(&shares) {
            test.extend_from_slice(&rows[f * t..(f + 1) * t]);
            let mut rest: Vec<usize> = rows[..f * t].iter().chain(&rows[(f + 1) * t..]).copied().collect();
            shuffle(&mut rest, &mut fold_rng);
            eval.extend_from_slice(&rest[..e]);
            train.extend_from_slice(&rest[e..]);
        }
        for part in [&mut train, &mut eval, &mut test] {
            part.sort_unstable();
        }
        folds.push(Fold { train, eval, test });
    }
    Ok(FoldPlan { k, sizes, folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_untileable_sizes() {
        let y: Vec<usize> = (0..60).map(|i| i / 15).collect();
        let bad = FoldSizes { train: 40, eval: 8, test: 10 };
        assert!(kfold_split(&y, 4, 5, bad, 0).is_err());
        let uneven: Vec<usize> = (0..60).map(|i| usize::from(i >= 13)).collect();
        let sizes = FoldSizes { train: 40, eval: 8, test: 12 };
        assert!(matches!(kfold_split(&uneven, 2, 5, sizes, 0), Err(Error::Config(_))));
    }
}
