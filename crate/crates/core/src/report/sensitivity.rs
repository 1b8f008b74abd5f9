use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{aggregate, ResultTable};

/// Model rankings of one dataset under each split regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub dataset: String,
    /// `(regime, models best first)`.
    pub rankings: Vec<(String, Vec<String>)>,
    /// Top model differs between at least two regimes.
    pub flip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
}

/// Ranks models by mean test accuracy (descending, name on ties) in every
/// regime for each dataset present in all of them, and flags datasets whose
/// top model changes.
pub fn split_sensitivity_report(regimes: &[(String, ResultTable)]) -> Result<SensitivityReport> {
    if regimes.len() < 2 {
        return Err(Error::InvalidArgument(
            "split sensitivity needs at least two regimes".into(),
        ));
    }
    let mut datasets = regimes[0].1.datasets();
    datasets.retain(|d| regimes.iter().all(|(_, t)| t.datasets().contains(d)));
    let rows = datasets
        .into_iter()
        .map(|d| {
            let rankings: Vec<(String, Vec<String>)> = regimes
                .iter()
                .map(|(name, t)| {
                    let mut rows: Vec<_> = aggregate(t).into_iter().filter(|r| r.dataset == d).collect();
                    rows.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.model.cmp(&b.model)));
                    (name.clone(), rows.into_iter().map(|r| r.model).collect())
                })
                .collect();
            let top = &rankings[0].1[0];
            let flip = rankings.iter().any(|(_, r)| &r[0] != top);
            SensitivityRow {
                dataset: d,
                rankings,
                flip,
            }
        })
        .collect();
    Ok(SensitivityReport { rows })
}

impl SensitivityReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&format!(
                "{}{}\n",
                row.dataset,
                if row.flip { "  [ranking flip]" } else { "" }
            ));
            for (regime, ranking) in &row.rankings {
                out.push_str(&format!("  {regime}: {}\n", ranking.join(" > ")));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ResultRecord;

    fn t(accs: &[(&str, f64)]) -> ResultTable {
        ResultTable::new(
            accs.iter()
                .map(|&(m, a)| ResultRecord {
                    dataset: "cora".into(),
                    model: m.into(),
                    split_id: 0,
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
    fn detects_flip() {
        let a = t(&[("GAT", 0.83), ("GCN", 0.81)]);
        let b = t(&[("GAT", 0.80), ("GCN", 0.82)]);
        let r = split_sensitivity_report(&[("planetoid".into(), a.clone()), ("random".into(), b)]).unwrap();
        assert!(r.rows[0].flip);
        assert_eq!(r.rows[0].rankings[0].1, vec!["GAT", "GCN"]);
        let same = split_sensitivity_report(&[("x".into(), a.clone()), ("y".into(), a.clone())]).unwrap();
        assert!(!same.rows[0].flip);
        assert!(split_sensitivity_report(&[("x".into(), a)]).is_err());
    }
}
