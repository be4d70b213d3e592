use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, NormalizationRecord};
use crate::error::{Error, Result};
use crate::nncore::Matrix;

/// JSON document written next to a saved CSV (`name.csv` → `name.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub label_column: String,
    pub class_names: Vec<String>,
    pub sample_ids: Vec<usize>,
    pub normalization: Option<NormalizationRecord>,
    #[serde(default)]
    pub feature_sets: BTreeMap<String, Vec<usize>>,
    pub seed: Option<u64>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Reads a numeric table with a header row. Every column except
/// `label_column` becomes a feature; labels are factorized to dense ids in
/// order of first appearance. Row/column numbers in errors are 1-based
/// data rows and 0-based columns.
pub fn load_csv(path: &Path, label_column: &str, delimiter: u8) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(csv_error)?;
    let headers: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Config(format!("label column `{label_column}` not in header")))?;
    let column_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(csv_error)?;
        if record.len() != headers.len() {
            return Err(Error::Table {
                row,
                column: record.len().min(headers.len()),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                let next = class_names.len();
                let id = *class_ids.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                y.push(id);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Table {
                    row,
                    column: c,
                    message: format!("non-numeric cell `{cell}`"),
                })?;
                data.push(v);
            }
        }
    }
    let x = Matrix::from_vec(y.len(), column_names.len(), data)?;
    Dataset::new(x, y, class_names, column_names)
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Table {
            row: pos.record() as usize,
            column: 0,
            message: e.to_string(),
        },
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::InvalidInput(format!("{other:?}")),
        },
    }
}

/// Writes features plus a trailing `label` column (class names), and a JSON
/// sidecar with class order, sample ids, normalization record and seed.
/// Values use the shortest representation that parses back to the same
/// `f64`.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let label_column = unique_label_column(&dataset.column_names);
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = dataset.column_names.clone();
    header.push(label_column.clone());
    writer.write_record(&header).map_err(csv_error)?;
    for r in 0..dataset.len() {
        let mut record: Vec<String> = dataset.x.row(r).iter().map(|v| format!("{v:?}")).collect();
        record.push(dataset.class_names[dataset.y[r]].clone());
        writer.write_record(&record).map_err(csv_error)?;
    }
    writer.flush()?;
    let sidecar = Sidecar {
        label_column,
        class_names: dataset.class_names.clone(),
        sample_ids: dataset.sample_ids.clone(),
        normalization: dataset.normalization.clone(),
        feature_sets: dataset.feature_sets.clone(),
        seed: dataset.seed,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn unique_label_column(columns: &[String]) -> String {
    let mut name = "label".to_string();
    while columns.contains(&name) {
        name.push('_');
    }
    name
}

pub fn read_sidecar(csv_path: &Path) -> Result<Option<Sidecar>> {
    let path = sidecar_path(csv_path);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&std::fs::read_to_string(path)?)?))
}

/// Loads a CSV written by [`save_csv`], restoring class order and metadata
/// from its sidecar. Without a sidecar this is `load_csv(path, "label", b',')`.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let Some(sidecar) = read_sidecar(path)? else {
        return load_csv(path, "label", b',');
    };
    let mut ds = load_csv(path, &sidecar.label_column, b',')?;
    let remap: Vec<usize> = ds
        .class_names
        .iter()
        .map(|name| {
            sidecar.class_names.iter().position(|n| n == name).ok_or_else(|| {
                Error::Consistency(format!("label `{name}` missing from sidecar class list"))
            })
        })
        .collect::<Result<_>>()?;
    ds.y.iter_mut().for_each(|c| *c = remap[*c]);
    ds.class_names = sidecar.class_names;
    if sidecar.sample_ids.len() != ds.len() {
        return Err(Error::Consistency(format!(
            "sidecar lists {} sample ids for {} rows",
            sidecar.sample_ids.len(),
            ds.len()
        )));
    }
    ds.sample_ids = sidecar.sample_ids;
    ds.normalization = sidecar.normalization;
    ds.feature_sets = sidecar.feature_sets;
    ds.seed = sidecar.seed;
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_and_factorizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "a,diag,b\n1,ND,2\n3,HC,4\n5,ND,6.5\n");
        let ds = load_csv(&p, "diag", b',').unwrap();
        assert_eq!(ds.x.shape(), (3, 2));
        assert_eq!(ds.y, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["ND", "HC"]);
        assert_eq!(ds.column_names, vec!["a", "b"]);
        assert_eq!(ds.x.get(2, 1), 6.5);
    }

    #[test]
    fn semicolon_delimiter() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "y;f\nA;0.5\n");
        assert_eq!(load_csv(&p, "y", b';').unwrap().x.get(0, 0), 0.5);
    }

    #[test]
    fn errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.csv", "a,y,b\n1,A,2\n3,B,x\n");
        assert!(matches!(load_csv(&p, "y", b','), Err(Error::Table { row: 2, column: 2, .. })));
        let p = write(dir.path(), "ragged.csv", "a,y,b\n1,A,2\n3,B\n");
        assert!(matches!(load_csv(&p, "y", b','), Err(Error::Table { row: 2, .. })));
        let p = write(dir.path(), "ok.csv", "a,y\n1,A\n");
        assert!(matches!(load_csv(&p, "label", b','), Err(Error::Config(_))));
    }
}
