use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::AugmentationResult;
use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 6] = ["iteration", "accepted", "S_eval", "S_test", "similarity", "train_pool_rows"];

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub accepted: bool,
    pub s_eval: Option<f64>,
    pub s_test: Option<f64>,
    pub similarity: Option<f64>,
    pub train_pool_rows: usize,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl AugmentationResult {
    /// CSV text: header plus one line per iteration; missing scores are
    /// empty cells. Floats use the shortest round-trip representation.
    pub fn trace_csv(&self) -> String {
        let mut out = TRACE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration,
                r.accepted,
                cell(r.s_eval),
                cell(r.s_test),
                cell(r.similarity),
                r.train_pool_rows
            );
        }
        out
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.trace_csv())?;
        Ok(())
    }
}

/// Parses trace CSV text. A missing required column is a
/// [`Error::Config`] naming the column.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("trace header: {e}")))?
        .clone();
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(TRACE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("trace is missing column `{name}`")))?;
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Table {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        let get = |k: usize| record.get(index[k]).unwrap_or("").trim();
        let bad = |k: usize| Error::Table {
            row,
            column: index[k],
            message: format!("invalid {} value `{}`", TRACE_COLUMNS[k], get(k)),
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            match get(k) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(k)),
            }
        };
        rows.push(TraceRow {
            iteration: get(0).parse().map_err(|_| bad(0))?,
            accepted: get(1).parse().map_err(|_| bad(1))?,
            s_eval: opt(2)?,
            s_test: opt(3)?,
            similarity: opt(4)?,
            train_pool_rows: get(5).parse().map_err(|_| bad(5))?,
        });
    }
    Ok(rows)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    parse_trace_csv(&std::fs::read_to_string(path)?)
}
