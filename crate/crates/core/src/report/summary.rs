use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{aggregate, average_rank, relative_accuracy, ResultTable};

use super::boxplot::{boxplot_file, BoxplotFile};

/// Test accuracy summary of one (dataset, model) pair. `mean` and `std` are
/// fractions; `formatted` is the percent rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub dataset: String,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    /// Highest formatted mean on this dataset (ties all flagged).
    pub best: bool,
    pub formatted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub model: String,
    pub relative_accuracy: f64,
    pub average_rank: f64,
}

/// Table-style summary of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub cells: Vec<SummaryCell>,
    pub ranks: Vec<RankRow>,
    /// Cells missing from the relative-accuracy and rank computations.
    pub exclusions: Vec<String>,
    /// Conventions used.
    pub std_convention: String,
    pub quantile_convention: String,
}

/// `"81.5 ± 1.3"`: percent with one decimal.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", 100.0 * mean, 100.0 * std)
}

/// Mean ± std per (dataset, model), best model per dataset, relative accuracy
/// and average rank.
pub fn summarize(table: &ResultTable) -> Result<Summary> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty result table".into()));
    }
    let rows = aggregate(table);
    let datasets = table.datasets();
    let models = table.models();
    let mut cells: Vec<SummaryCell> = rows
        .into_iter()
        .map(|r| SummaryCell {
            formatted: format_cell(r.mean, r.std),
            dataset: r.dataset,
            model: r.model,
            mean: r.mean,
            std: r.std,
            count: r.count,
            best: false,
        })
        .collect();
    for d in &datasets {
        let key = |c: &SummaryCell| (1000.0 * c.mean).round() as i64;
        let top = cells.iter().filter(|c| &c.dataset == d).map(key).max();
        for c in cells.iter_mut().filter(|c| &c.dataset == d) {
            c.best = Some(key(c)) == top;
        }
    }
    let rel = relative_accuracy(table);
    let rank = average_rank(table);
    let ranks = models
        .iter()
        .filter(|m| rel.scores.contains_key(*m))
        .map(|m| RankRow {
            model: m.clone(),
            relative_accuracy: rel.scores[m],
            average_rank: rank.scores[m],
        })
        .collect();
    Ok(Summary {
        datasets,
        models,
        cells,
        ranks,
        exclusions: rel.exclusions,
        std_convention: "population".into(),
        quantile_convention: "linear interpolation, position q*(n-1)".into(),
    })
}

impl Summary {
    pub fn cell(&self, dataset: &str, model: &str) -> Option<&SummaryCell> {
        self.cells.iter().find(|c| c.dataset == dataset && c.model == model)
    }

    /// Fixed-width text table; models as rows, datasets as columns. The best
    /// cell of each column carries a trailing `*`, absent cells read `N/A`.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["model".to_string()];
        header.extend(self.datasets.iter().cloned());
        grid.push(header);
        for m in &self.models {
            let mut row = vec![m.clone()];
            for d in &self.datasets {
                row.push(match self.cell(d, m) {
                    Some(c) if c.best => format!("{}*", c.formatted),
                    Some(c) => format!("{} ", c.formatted),
                    None => "N/A ".into(),
                });
            }
            grid.push(row);
        }
        let cols = grid[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|k| grid.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &grid {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(k, (s, &w))| {
                    let pad = w - s.chars().count();
                    if k == 0 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(c)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn ranks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.ranks {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Parses `summary.csv`.
pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryCell>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `summary.txt`, `summary.csv`, `summary.json`, `ranks.csv` and
/// `boxplots.json` into `dir`.
pub fn write_report(table: &ResultTable, dir: &Path) -> Result<Summary> {
    let summary = summarize(table)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("summary.txt", summary.to_text())?;
    write("summary.csv", summary.to_csv()?)?;
    write("summary.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    write("ranks.csv", summary.ranks_csv()?)?;
    let boxes: BoxplotFile = boxplot_file(table);
    write("boxplots.json", serde_json::to_string_pretty(&boxes)? + "\n")?;
    Ok(summary)
}
