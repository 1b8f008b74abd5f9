use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::synthetic::{planted_partition, SyntheticConfig};
use crate::graph::{load_dataset, preprocess, Dataset};
use crate::models::{GraphContext, ModelSpec};
use crate::propagation::label_propagate;
use crate::rng::{RngStream, StreamKey};
use crate::trainer::{accuracy_of_predictions, train, TrainConfig};

use super::results::{ResultRecord, ResultTable};
use super::split::{generate_split_with, load_fixed_split, Split, SplitSizes};

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSource {
    /// Name used in result records; defaults to the dataset's own name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Container directory or edge-list bundle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Generated planted-partition graph instead of a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    /// JSON split file; when set every split id uses this split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_split: Option<PathBuf>,
    /// Run the standardization pipeline after loading (a no-op on prepared
    /// containers).
    #[serde(default = "yes")]
    pub preprocess: bool,
    #[serde(default = "default_min_class")]
    pub min_class_count: usize,
    /// Overrides the stored row-normalization flag of the features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_norm: Option<bool>,
}

fn yes() -> bool {
    true
}
fn default_min_class() -> usize {
    50
}

impl DatasetSource {
    pub fn path(path: impl Into<PathBuf>) -> Self {
        Self {
            name: None,
            path: Some(path.into()),
            synthetic: None,
            fixed_split: None,
            preprocess: true,
            min_class_count: default_min_class(),
            feature_norm: None,
        }
    }

    pub fn synthetic(cfg: SyntheticConfig) -> Self {
        Self {
            synthetic: Some(cfg),
            path: None,
            ..Self::path("")
        }
    }

    /// Makes relative `path` and `fixed_split` relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.path, &mut self.fixed_split].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Loads, optionally preprocesses and attaches the fixed split.
    pub fn load(&self) -> Result<LoadedDataset> {
        let raw = match (&self.path, &self.synthetic) {
            (Some(p), None) => load_dataset(p)?,
            (None, Some(cfg)) => planted_partition(cfg)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "dataset source needs exactly one of `path` or `synthetic`".into(),
                ))
            }
        };
        let mut ds = if self.preprocess {
            preprocess(&raw, self.min_class_count)?.dataset
        } else {
            raw
        };
        if let Some(n) = &self.name {
            ds.name = n.clone();
        }
        if let Some(f) = self.feature_norm {
            ds.feature_norm = f;
        }
        let fixed_split = match &self.fixed_split {
            Some(p) => Some(load_fixed_split(p, ds.num_nodes())?),
            None => None,
        };
        LoadedDataset::new(ds, fixed_split)
    }
}

/// A dataset ready for trials.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Arc<Dataset>,
    pub graph: Arc<GraphContext<f32>>,
    pub fixed_split: Option<Split>,
}

impl LoadedDataset {
    pub fn new(dataset: Dataset, fixed_split: Option<Split>) -> Result<Self> {
        let graph = GraphContext::new(&dataset)?;
        Ok(Self {
            dataset: Arc::new(dataset),
            graph: Arc::new(graph),
            fixed_split,
        })
    }

    pub fn name(&self) -> &str {
        &self.dataset.name
    }

    /// Split `split_id` under `seed`, or the fixed split if one is attached.
    pub fn split(&self, seed: u64, split_id: usize, sizes: SplitSizes) -> Result<Split> {
        match &self.fixed_split {
            Some(s) => Ok(Split { split_id, ..s.clone() }),
            None => generate_split_with(&self.dataset, seed, split_id, sizes),
        }
    }
}

/// A full benchmark: every dataset x model x split x init.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub datasets: Vec<DatasetSource>,
    pub models: Vec<ModelSpec>,
    pub num_splits: usize,
    pub num_inits: usize,
    pub experiment_seed: u64,
    #[serde(default)]
    pub train_config: TrainConfig,
    #[serde(default)]
    pub split_sizes: SplitSizes,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.num_splits == 0 || self.num_inits == 0 {
            return Err(Error::InvalidArgument("num_splits and num_inits must be >= 1".into()));
        }
        if self.datasets.is_empty() || self.models.is_empty() {
            return Err(Error::InvalidArgument(
                "plan needs at least one dataset and one model".into(),
            ));
        }
        for m in &self.models {
            m.validate()?;
        }
        let mut labels: Vec<&str> = self.models.iter().map(|m| m.label()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "model labels must be unique; set `name` on repeated kinds".into(),
            ));
        }
        self.train_config.validate()
    }

    /// Parses a plan and resolves relative dataset paths against the file's
    /// directory.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut plan = Self::from_value(value)?;
        plan.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(plan)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.datasets.iter_mut().for_each(|d| d.resolve(base));
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let plan: Self = serde_json::from_value(value)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Number of records the plan produces.
    pub fn cardinality(&self) -> usize {
        self.datasets.len() * self.models.len() * self.num_splits * self.num_inits
    }
}

/// Stream of one (dataset, model, split, init) trial.
pub fn trial_stream(seed: u64, dataset: &str, model: &str, split_id: usize, init_id: usize) -> RngStream {
    RngStream::derive(
        seed,
        &[
            StreamKey::from("trial"),
            StreamKey::from(dataset),
            StreamKey::from(model),
            StreamKey::from(split_id),
            StreamKey::from(init_id),
        ],
    )
}

/// One schedulable unit of work. Propagation jobs cover every init.
#[derive(Debug, Clone)]
pub struct Job {
    pub dataset: usize,
    pub model: ModelSpec,
    pub split_id: usize,
    /// `None` for gradient-free models.
    pub init_id: Option<usize>,
}

/// Shared inputs of a batch of jobs.
pub struct JobRunner<'a> {
    pub data: &'a [LoadedDataset],
    /// `splits[dataset][split_id]`.
    pub splits: &'a [Vec<Split>],
    pub seed: u64,
    pub num_inits: usize,
    pub train_config: &'a TrainConfig,
}

impl JobRunner<'_> {
    /// Runs `jobs` on a pool of `workers` threads. Results come back in job
    /// order regardless of scheduling; `progress` is called once per
    /// finished job from worker threads.
    pub fn run(
        &self,
        jobs: &[Job],
        workers: usize,
        progress: &(dyn Fn(&[ResultRecord]) + Sync),
    ) -> Result<Vec<Vec<ResultRecord>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        Ok(pool.install(|| {
            jobs.par_iter()
                .map(|job| {
                    let recs = run_job(
                        &self.data[job.dataset],
                        &self.splits[job.dataset][job.split_id],
                        job,
                        self.seed,
                        self.num_inits,
                        self.train_config,
                    );
                    progress(&recs);
                    recs
                })
                .collect()
        }))
    }
}

fn run_job(
    data: &LoadedDataset,
    split: &Split,
    job: &Job,
    seed: u64,
    num_inits: usize,
    cfg: &TrainConfig,
) -> Vec<ResultRecord> {
    let model = job.model.label().to_string();
    let record =
        |init_id: usize, test: f64, val: f64, best: usize, secs: f64, diverged: bool, det: bool| ResultRecord {
            dataset: data.name().to_string(),
            model: model.clone(),
            split_id: job.split_id,
            init_id,
            test_accuracy: test,
            val_accuracy: val,
            best_epoch: best,
            wall_seconds: secs,
            diverged,
            deterministic: det,
        };
    match job.init_id {
        None => {
            let start = std::time::Instant::now();
            let cfg = job.model.propagation_config().expect("propagation job");
            let (test, val, failed) = match label_propagate(&data.dataset, split, &cfg) {
                Ok(out) => (
                    accuracy_of_predictions(&out.predictions, &data.dataset.labels, &split.test),
                    accuracy_of_predictions(&out.predictions, &data.dataset.labels, &split.val),
                    false,
                ),
                Err(e) => {
                    log::warn!("{model} on {} split {}: {e}", data.name(), job.split_id);
                    (0.0, 0.0, true)
                }
            };
            let secs = start.elapsed().as_secs_f64();
            (0..num_inits)
                .map(|i| record(i, test, val, 0, secs, failed, true))
                .collect()
        }
        Some(init_id) => {
            let mut rng = trial_stream(seed, data.name(), &model, job.split_id, init_id);
            match train(&job.model, &data.graph, split, cfg, &mut rng) {
                Ok(o) => vec![record(
                    init_id,
                    o.test_accuracy,
                    o.val_accuracy,
                    o.best_epoch,
                    o.wall_seconds,
                    o.diverged,
                    false,
                )],
                Err(e) => {
                    log::warn!("{model} on {} split {} init {init_id}: {e}", data.name(), job.split_id);
                    vec![record(init_id, 0.0, 0.0, 0, 0.0, true, false)]
                }
            }
        }
    }
}

/// Job list for `models` over all loaded datasets.
pub fn plan_jobs(num_datasets: usize, models: &[ModelSpec], num_splits: usize, num_inits: usize) -> Vec<Job> {
    let mut jobs = Vec::new();
    for dataset in 0..num_datasets {
        for model in models {
            for split_id in 0..num_splits {
                if model.kind.is_propagation() {
                    jobs.push(Job {
                        dataset,
                        model: model.clone(),
                        split_id,
                        init_id: None,
                    });
                } else {
                    for init_id in 0..num_inits {
                        jobs.push(Job {
                            dataset,
                            model: model.clone(),
                            split_id,
                            init_id: Some(init_id),
                        });
                    }
                }
            }
        }
    }
    jobs
}

/// Generates `num_splits` splits per dataset.
pub fn make_splits(data: &[LoadedDataset], seed: u64, num_splits: usize, sizes: SplitSizes) -> Result<Vec<Vec<Split>>> {
    data.iter()
        .map(|d| (0..num_splits).map(|s| d.split(seed, s, sizes)).collect())
        .collect()
}

/// Loads every dataset of the plan and runs all trials.
pub fn run_experiment(plan: &ExperimentPlan, workers: usize) -> Result<ResultTable> {
    run_experiment_with(plan, workers, &|_| {})
}

/// [`run_experiment`] with a per-job progress callback.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    workers: usize,
    progress: &(dyn Fn(&[ResultRecord]) + Sync),
) -> Result<ResultTable> {
    plan.validate()?;
    let data = plan.datasets.iter().map(|d| d.load()).collect::<Result<Vec<_>>>()?;
    run_loaded(plan, &data, workers, progress)
}

/// Runs a plan against already loaded datasets (the plan's sources are
/// ignored).
pub fn run_loaded(
    plan: &ExperimentPlan,
    data: &[LoadedDataset],
    workers: usize,
    progress: &(dyn Fn(&[ResultRecord]) + Sync),
) -> Result<ResultTable> {
    let splits = make_splits(data, plan.experiment_seed, plan.num_splits, plan.split_sizes)?;
    let jobs = plan_jobs(data.len(), &plan.models, plan.num_splits, plan.num_inits);
    let runner = JobRunner {
        data,
        splits: &splits,
        seed: plan.experiment_seed,
        num_inits: plan.num_inits,
        train_config: &plan.train_config,
    };
    let out = runner.run(&jobs, workers, progress)?;
    Ok(ResultTable::new(out.into_iter().flatten().collect()))
}
