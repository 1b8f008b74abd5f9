use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact header of `results.csv`.
pub const RESULTS_HEADER: &str =
    "dataset,model,split_id,init_id,test_accuracy,val_accuracy,best_epoch,wall_seconds,diverged,deterministic";

/// One (dataset, model, split, init) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub model: String,
    pub split_id: usize,
    pub init_id: usize,
    pub test_accuracy: f64,
    pub val_accuracy: f64,
    pub best_epoch: usize,
    pub wall_seconds: f64,
    pub diverged: bool,
    /// Gradient-free method; the record is replicated across inits.
    pub deterministic: bool,
}

/// Collection of trial records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub records: Vec<ResultRecord>,
}

impl ResultTable {
    pub fn new(records: Vec<ResultRecord>) -> Self {
        let mut t = Self { records };
        t.sort();
        t
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Canonical order: dataset, model, split, init.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (&a.dataset, &a.model, a.split_id, a.init_id).cmp(&(&b.dataset, &b.model, b.split_id, b.init_id))
        });
    }

    /// Copy with every `wall_seconds` set to zero, for byte-stable output.
    pub fn without_timing(&self) -> Self {
        let mut t = self.clone();
        t.records.iter_mut().for_each(|r| r.wall_seconds = 0.0);
        t
    }

    /// Distinct dataset names in canonical order.
    pub fn datasets(&self) -> Vec<String> {
        let mut v: Vec<String> = self.records.iter().map(|r| r.dataset.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Distinct model names in canonical order.
    pub fn models(&self) -> Vec<String> {
        let mut v: Vec<String> = self.records.iter().map(|r| r.model.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(RESULTS_HEADER.split(','))?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    /// Reads `results.csv`; the header must match [`RESULTS_HEADER`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != RESULTS_HEADER {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("unexpected header {header:?}"),
            });
        }
        let mut records = Vec::new();
        for (k, row) in rdr.deserialize().enumerate() {
            let r: ResultRecord = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                message: e.to_string(),
            })?;
            records.push(r);
        }
        Ok(Self::new(records))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(serde_json::from_str::<ResultTable>(&text)?.records))
    }
}
