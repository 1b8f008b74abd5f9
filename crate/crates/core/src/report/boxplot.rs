use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ResultTable;

/// Five-number summary with Tukey fences for one (dataset, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub dataset: String,
    pub model: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values inside `[q1 - 1.5 IQR, q3 + 1.5 IQR]`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Values outside the fences, ascending.
    pub outliers: Vec<f64>,
}

/// Contents of `boxplots.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotFile {
    pub quantile_convention: String,
    pub outlier_rule: String,
    pub boxes: Vec<BoxplotSummary>,
    /// Pairs with fewer than four records.
    pub skipped: Vec<String>,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `q * (n - 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summary_of(dataset: &str, model: &str, mut v: Vec<f64>) -> BoxplotSummary {
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().cloned().filter(|x| (lo..=hi).contains(x)).collect();
    BoxplotSummary {
        dataset: dataset.into(),
        model: model.into(),
        count: v.len(),
        min: v[0],
        q1,
        median,
        q3,
        max: v[v.len() - 1],
        whisker_low: inside[0],
        whisker_high: inside[inside.len() - 1],
        outliers: v.iter().cloned().filter(|x| !(lo..=hi).contains(x)).collect(),
    }
}

fn groups(table: &ResultTable) -> BTreeMap<(String, String), Vec<f64>> {
    let mut g: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &table.records {
        g.entry((r.dataset.clone(), r.model.clone()))
            .or_default()
            .push(r.test_accuracy);
    }
    g
}

/// Boxplot statistics of test accuracy per (dataset, model). Every pair
/// needs at least four records.
pub fn boxplot_stats(table: &ResultTable) -> Result<Vec<BoxplotSummary>> {
    groups(table)
        .into_iter()
        .map(|((d, m), v)| {
            if v.len() < 4 {
                return Err(Error::InvalidArgument(format!(
                    "{m} on {d} has {} records, boxplots need at least 4",
                    v.len()
                )));
            }
            Ok(summary_of(&d, &m, v))
        })
        .collect()
}

pub(crate) fn boxplot_file(table: &ResultTable) -> BoxplotFile {
    let mut boxes = Vec::new();
    let mut skipped = Vec::new();
    for ((d, m), v) in groups(table) {
        if v.len() < 4 {
            skipped.push(format!("{m} on {d}"));
        } else {
            boxes.push(summary_of(&d, &m, v));
        }
    }
    BoxplotFile {
        quantile_convention: "linear interpolation, position q*(n-1)".into(),
        outlier_rule: "outside [q1 - 1.5*IQR, q3 + 1.5*IQR]".into(),
        boxes,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ResultRecord;

    fn table(vals: &[f64]) -> ResultTable {
        ResultTable::new(
            vals.iter()
                .enumerate()
                .map(|(k, &a)| ResultRecord {
                    dataset: "d".into(),
                    model: "m".into(),
                    split_id: k,
                    init_id: 0,
                    test_accuracy: a,
                    val_accuracy: 0.0,
                    best_epoch: 0,
                    wall_seconds: 0.0,
                    diverged: false,
                    deterministic: false,
                })
                .collect(),
        )
    }

    #[test]
    fn five_values() {
        let b = &boxplot_stats(&table(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap()[0];
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert!(b.outliers.is_empty());
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));
    }

    #[test]
    fn single_outlier() {
        let b = &boxplot_stats(&table(&[1.0, 1.0, 1.0, 1.0, 100.0])).unwrap()[0];
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 1.0);
    }

    #[test]
    fn bimodal_minority_flagged() {
        let mut v: Vec<f64> = (0..60).map(|k| 0.88 + (k % 5) as f64 * 0.01).collect();
        v.extend([0.31, 0.25, 0.38, 0.12]);
        let b = &boxplot_stats(&table(&v)).unwrap()[0];
        assert_eq!(b.outliers, vec![0.12, 0.25, 0.31, 0.38]);
    }

    #[test]
    fn too_few_records() {
        assert!(boxplot_stats(&table(&[0.5, 0.6, 0.7])).is_err());
        assert_eq!(boxplot_file(&table(&[0.5])).skipped, vec!["m on d".to_string()]);
    }

    #[test]
    fn interpolated_quantiles() {
        let v = [0.0, 10.0];
        assert_eq!(quantile(&v, 0.25), 2.5);
        assert_eq!(quantile(&[3.0], 0.5), 3.0);
    }
}
