use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{param_count, ModelKind, ModelSpec};
use crate::trainer::TrainConfig;

use super::experiment::{make_splits, plan_jobs, JobRunner, LoadedDataset};
use super::results::ResultRecord;
use super::split::SplitSizes;

/// `(features, classes)` of the standardized CORA graph, where the parameter
/// budget is evaluated.
pub const CORA_DIMS: (usize, usize) = (1433, 7);

/// Hyperparameter values to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpace {
    pub hidden_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub dropouts: Vec<f64>,
    pub l2_strengths: Vec<f64>,
    /// GAT only.
    pub attention_dropouts: Vec<f64>,
    /// Label propagation only.
    pub alphas: Vec<f64>,
}

impl Default for GridSpace {
    fn default() -> Self {
        let tenths = |lo: u32, hi: u32| (lo..=hi).map(|k| k as f64 / 10.0).collect::<Vec<_>>();
        Self {
            hidden_sizes: vec![8, 16, 32, 64],
            learning_rates: vec![0.001, 0.003, 0.005, 0.008, 0.01],
            dropouts: tenths(2, 8),
            l2_strengths: vec![1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1],
            attention_dropouts: tenths(2, 8),
            alphas: tenths(1, 9),
        }
    }
}

impl GridSpace {
    /// Every configuration for `base.kind`, other fields taken from `base`.
    ///
    /// Graph models and MLP vary hidden size, learning rate, dropout and L2
    /// strength (GAT also attention dropout). Logistic regression has no
    /// hidden layer or dropout and varies learning rate and L2 only; label
    /// propagation varies `alpha` only.
    pub fn configurations(&self, base: &ModelSpec) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        let kind = base.kind;
        if kind.is_propagation() {
            for &a in &self.alphas {
                let mut s = base.clone();
                s.label_prop.alpha = a;
                out.push(s);
            }
        } else if kind == ModelKind::LogReg {
            for &lr in &self.learning_rates {
                for &l2 in &self.l2_strengths {
                    out.push(ModelSpec {
                        learning_rate: lr,
                        l2_strength: l2,
                        ..base.clone()
                    });
                }
            }
        } else {
            let att: &[f64] = if kind == ModelKind::Gat {
                &self.attention_dropouts
            } else {
                &[f64::NAN]
            };
            for &h in &self.hidden_sizes {
                for &lr in &self.learning_rates {
                    for &d in &self.dropouts {
                        for &l2 in &self.l2_strengths {
                            for &a in att {
                                out.push(ModelSpec {
                                    hidden_size: h,
                                    learning_rate: lr,
                                    feature_dropout: d,
                                    l2_strength: l2,
                                    attention_dropout: if a.is_nan() { base.attention_dropout } else { a },
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        for (k, s) in out.iter_mut().enumerate() {
            s.name = Some(format!("{}#{k}", kind.name()));
        }
        out
    }
}

/// Budget and protocol of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchPlan {
    #[serde(default)]
    pub grid: GridSpace,
    pub num_splits: usize,
    pub num_inits: usize,
    pub experiment_seed: u64,
    #[serde(default)]
    pub train_config: TrainConfig,
    #[serde(default)]
    pub split_sizes: SplitSizes,
    /// Largest admissible trainable-parameter count; `None` disables the
    /// filter.
    #[serde(default = "default_budget")]
    pub param_budget: Option<usize>,
    /// Input and class dimensions the budget is checked at.
    #[serde(default = "default_budget_dims")]
    pub budget_dims: (usize, usize),
}

fn default_budget() -> Option<usize> {
    Some(92_231)
}
fn default_budget_dims() -> (usize, usize) {
    CORA_DIMS
}

/// Mean validation accuracy of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub spec: ModelSpec,
    /// Average over datasets of the per-dataset mean.
    pub score: f64,
    pub per_dataset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ModelSpec,
    /// All evaluated configurations, best first.
    pub ranking: Vec<GridScore>,
    pub skipped_over_budget: usize,
}

/// Deterministic preference between equally scored configurations: smaller
/// hidden size, then larger L2, then smaller learning rate, then smaller
/// dropouts and alpha.
fn tie_break(a: &ModelSpec, b: &ModelSpec) -> Ordering {
    a.hidden_size
        .cmp(&b.hidden_size)
        .then(b.l2_strength.total_cmp(&a.l2_strength))
        .then(a.learning_rate.total_cmp(&b.learning_rate))
        .then(a.feature_dropout.total_cmp(&b.feature_dropout))
        .then(a.attention_dropout.total_cmp(&b.attention_dropout))
        .then(a.label_prop.alpha.total_cmp(&b.label_prop.alpha))
}

/// Orders scored configurations best first.
pub fn rank_scores(scores: &mut [GridScore]) {
    scores.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| tie_break(&x.spec, &y.spec)));
}

/// Evaluates every in-budget configuration of `base.kind` on all `data` and
/// returns the one with the best mean validation accuracy.
pub fn grid_search(
    data: &[LoadedDataset],
    base: &ModelSpec,
    plan: &GridSearchPlan,
    workers: usize,
) -> Result<GridResult> {
    grid_search_with(data, base, plan, workers, &|_| {})
}

pub fn grid_search_with(
    data: &[LoadedDataset],
    base: &ModelSpec,
    plan: &GridSearchPlan,
    workers: usize,
    progress: &(dyn Fn(&[ResultRecord]) + Sync),
) -> Result<GridResult> {
    if plan.num_splits == 0 || plan.num_inits == 0 || data.is_empty() {
        return Err(Error::InvalidArgument(
            "grid search needs datasets, splits and inits".into(),
        ));
    }
    plan.train_config.validate()?;
    let all = plan.grid.configurations(base);
    let (d, c) = plan.budget_dims;
    let total = all.len();
    let configs: Vec<ModelSpec> = all
        .into_iter()
        .filter(|s| s.validate().is_ok())
        .filter(|s| plan.param_budget.is_none_or(|b| param_count(s, d, c) <= b))
        .collect();
    if configs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let skipped = total - configs.len();
    let splits = make_splits(data, plan.experiment_seed, plan.num_splits, plan.split_sizes)?;
    let jobs = plan_jobs(data.len(), &configs, plan.num_splits, plan.num_inits);
    let runner = JobRunner {
        data,
        splits: &splits,
        seed: plan.experiment_seed,
        num_inits: plan.num_inits,
        train_config: &plan.train_config,
    };
    let results = runner.run(&jobs, workers, progress)?;

    let mut sums = vec![vec![(0.0f64, 0usize); data.len()]; configs.len()];
    let index: std::collections::HashMap<&str, usize> =
        configs.iter().enumerate().map(|(k, s)| (s.label(), k)).collect();
    for (job, recs) in jobs.iter().zip(&results) {
        let k = index[job.model.label()];
        for r in recs {
            let e = &mut sums[k][job.dataset];
            e.0 += r.val_accuracy;
            e.1 += 1;
        }
    }
    let mut ranking: Vec<GridScore> = configs
        .into_iter()
        .zip(sums)
        .map(|(spec, per)| {
            let per_dataset: Vec<f64> = per.iter().map(|&(s, n)| s / n as f64).collect();
            let score = per_dataset.iter().sum::<f64>() / per_dataset.len() as f64;
            GridScore {
                spec,
                score,
                per_dataset,
            }
        })
        .collect();
    rank_scores(&mut ranking);
    let mut best = ranking[0].spec.clone();
    best.name = None;
    Ok(GridResult {
        best,
        ranking,
        skipped_over_budget: skipped,
    })
}
