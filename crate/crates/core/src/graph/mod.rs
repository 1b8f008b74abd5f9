//! Graph and dataset representation, file formats and preprocessing.

mod adjacency;
mod dataset;
pub mod io;
pub mod synthetic;

pub use adjacency::SparseAdjacency;
pub use dataset::{
    add_self_loops, dataset_stats, filter_small_classes, largest_connected_component, preprocess, symmetrize, Dataset,
    DatasetStats, Preprocessed, StageRecord,
};
pub use io::{load_dataset, write_bundle, write_container, ContainerMeta};
