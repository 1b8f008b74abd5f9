//! Evaluation protocol: random per-class splits, the benchmark runner,
//! hyperparameter grid search and the aggregate metrics.

mod experiment;
mod grid;
mod metrics;
mod results;
mod split;

pub use experiment::{
    make_splits, plan_jobs, run_experiment, run_experiment_with, run_loaded, trial_stream, DatasetSource,
    ExperimentPlan, Job, JobRunner, LoadedDataset,
};
pub use grid::{
    grid_search, grid_search_with, rank_scores, GridResult, GridScore, GridSearchPlan, GridSpace, CORA_DIMS,
};
pub use metrics::{
    aggregate, average_rank, average_ranks, mean_std, relative_accuracy, split_means, AggregateRow, ModelScores,
};
pub use results::{ResultRecord, ResultTable, RESULTS_HEADER};
pub use split::{generate_split, generate_split_with, load_fixed_split, split_stream, Split, SplitSizes};
