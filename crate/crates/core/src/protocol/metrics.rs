use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::results::ResultTable;

/// Mean and population standard deviation of test accuracy for one
/// (dataset, model) pair over all its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Pools every (split, init) record per (dataset, model).
pub fn aggregate(table: &ResultTable) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &table.records {
        cells
            .entry((r.dataset.clone(), r.model.clone()))
            .or_default()
            .push(r.test_accuracy);
    }
    cells
        .into_iter()
        .map(|((dataset, model), v)| {
            let (mean, std) = mean_std(&v);
            AggregateRow {
                dataset,
                model,
                mean,
                std,
                count: v.len(),
            }
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-model scores plus the (dataset, split, model) cells that were missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub scores: BTreeMap<String, f64>,
    pub exclusions: Vec<String>,
}

type Cell = (String, usize);

/// Init-averaged test accuracy per (dataset, split) cell and model.
pub fn split_means(table: &ResultTable) -> BTreeMap<Cell, BTreeMap<String, f64>> {
    let mut sums: BTreeMap<Cell, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for r in &table.records {
        let e = sums
            .entry((r.dataset.clone(), r.split_id))
            .or_default()
            .entry(r.model.clone())
            .or_insert((0.0, 0));
        e.0 += r.test_accuracy;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(cell, m)| (cell, m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()))
        .collect()
}

fn exclusions(table: &ResultTable, cells: &BTreeMap<Cell, BTreeMap<String, f64>>) -> Vec<String> {
    let models = table.models();
    let mut out = Vec::new();
    for ((dataset, split), present) in cells {
        for m in &models {
            if !present.contains_key(m) {
                out.push(format!("{m} missing on {dataset} split {split}"));
            }
        }
    }
    out
}

/// Accuracy relative to the best model of each (dataset, split), in percent,
/// averaged over all cells where the model is present. Accuracies are first
/// averaged over inits. A cell whose best accuracy is zero counts as 100 for
/// every model.
pub fn relative_accuracy(table: &ResultTable) -> ModelScores {
    let cells = split_means(table);
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for present in cells.values() {
        let best = present.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (m, &v) in present {
            let ratio = if best > 0.0 { v / best } else { 1.0 };
            let e = acc.entry(m.clone()).or_insert((0.0, 0));
            e.0 += ratio;
            e.1 += 1;
        }
    }
    ModelScores {
        scores: acc.into_iter().map(|(m, (s, n))| (m, 100.0 * s / n as f64)).collect(),
        exclusions: exclusions(table, &cells),
    }
}

/// Descending ranks (1 = best) with tied values sharing the mean of their
/// positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank of each model over the (dataset, split) cells where it is
/// present, ranking init-averaged accuracies.
pub fn average_rank(table: &ResultTable) -> ModelScores {
    let cells = split_means(table);
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for present in cells.values() {
        let names: Vec<&String> = present.keys().collect();
        let vals: Vec<f64> = present.values().cloned().collect();
        for (m, r) in names.into_iter().zip(average_ranks(&vals)) {
            let e = acc.entry(m.clone()).or_insert((0.0, 0));
            e.0 += r;
            e.1 += 1;
        }
    }
    ModelScores {
        scores: acc.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect(),
        exclusions: exclusions(table, &cells),
    }
}
