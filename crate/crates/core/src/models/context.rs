use std::sync::Arc;

use crate::autodiff::{CsrPattern, SparseOperator};
use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::scalar::Scalar;

/// Read-only, per-dataset operators shared by every trial on that dataset.
#[derive(Debug, Clone)]
pub struct GraphContext<T> {
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    /// Model-ready features as an `N x D` sparse operator.
    pub features: SparseOperator<T>,
    /// Neighbourhood structure (self-loops included).
    pub pattern: Arc<CsrPattern>,
    /// Row of every stored adjacency entry.
    pub edge_rows: Arc<Vec<usize>>,
    /// `1 / sqrt(d_i d_j)` per entry.
    pub gcn_coef: Vec<T>,
    /// `1 / d_i` per entry.
    pub mean_coef: Vec<T>,
    /// `(d_i^-1/2, d_j^-1/2)` per entry, row-major `nnz x 2`.
    pub pseudo: Arc<Vec<T>>,
    pub labels: Vec<u32>,
}

impl<T: Scalar> GraphContext<T> {
    /// Builds the operators. Every node must carry a self-loop.
    pub fn new(ds: &Dataset) -> Result<Self> {
        let adj = &ds.adjacency;
        let n = adj.num_nodes();
        if let Some(i) = (0..n).find(|&i| !adj.contains(i, i)) {
            return Err(Error::InvalidArgument(format!(
                "node {i} has no self-loop; preprocess the dataset first"
            )));
        }
        let pattern = Arc::new(CsrPattern::from_adjacency(adj));
        let edge_rows = Arc::new(pattern.row_of_entries());
        let deg: Vec<f64> = (0..n).map(|i| adj.degree(i) as f64).collect();
        let mut gcn_coef = Vec::with_capacity(adj.nnz());
        let mut mean_coef = Vec::with_capacity(adj.nnz());
        let mut pseudo = Vec::with_capacity(2 * adj.nnz());
        for (i, j) in adj.iter_edges() {
            gcn_coef.push(T::from_f64_lossy(1.0 / (deg[i] * deg[j]).sqrt()));
            mean_coef.push(T::from_f64_lossy(1.0 / deg[i]));
            pseudo.push(T::from_f64_lossy(deg[i].powf(-0.5)));
            pseudo.push(T::from_f64_lossy(deg[j].powf(-0.5)));
        }
        let dense: Vec<T> = ds
            .model_features()
            .iter()
            .map(|&v| T::from_f64_lossy(v as f64))
            .collect();
        let features = SparseOperator::from_dense(n, ds.num_features, &dense);
        Ok(Self {
            num_nodes: n,
            num_features: ds.num_features,
            num_classes: ds.num_classes(),
            features,
            pattern,
            edge_rows,
            gcn_coef,
            mean_coef,
            pseudo: Arc::new(pseudo),
            labels: ds.labels.clone(),
        })
    }
}
