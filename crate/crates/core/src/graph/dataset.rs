//! Attributed, labelled graphs and the standardization pipeline applied
//! before benchmarking.

use serde::{Deserialize, Serialize};

use super::SparseAdjacency;
use crate::error::{Error, Result};

/// Node features, labels and adjacency of one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub adjacency: SparseAdjacency,
    /// Row-major `num_nodes x num_features`.
    pub features: Vec<f32>,
    pub num_features: usize,
    pub labels: Vec<u32>,
    pub class_names: Vec<String>,
    /// Row-L1-normalize features before they enter a model.
    pub feature_norm: bool,
}

impl Dataset {
    /// Checks shape and label invariants.
    pub fn new(
        name: impl Into<String>,
        adjacency: SparseAdjacency,
        features: Vec<f32>,
        num_features: usize,
        labels: Vec<u32>,
        class_names: Vec<String>,
        feature_norm: bool,
    ) -> Result<Self> {
        let n = adjacency.num_nodes();
        if features.len() != n * num_features {
            return Err(Error::LengthMismatch(format!(
                "features hold {} values, expected {n} x {num_features}",
                features.len()
            )));
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch(format!("{} labels for {n} nodes", labels.len())));
        }
        let c = class_names.len();
        let mut counts = vec![0usize; c];
        for (node, &l) in labels.iter().enumerate() {
            if l as usize >= c {
                return Err(Error::LabelOutOfRange {
                    node,
                    label: l,
                    num_classes: c,
                });
            }
            counts[l as usize] += 1;
        }
        if let Some(empty) = counts.iter().position(|&k| k == 0) {
            return Err(Error::EmptyClass(empty));
        }
        Ok(Self {
            name: name.into(),
            adjacency,
            features,
            num_features,
            labels,
            class_names,
            feature_norm,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_row(&self, i: usize) -> &[f32] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Nodes of each class in increasing index order.
    pub fn nodes_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Features as the model sees them: row-L1-normalized when `feature_norm`
    /// is set, otherwise unchanged. All-zero rows stay zero.
    pub fn model_features(&self) -> Vec<f32> {
        if !self.feature_norm {
            return self.features.clone();
        }
        let d = self.num_features;
        let mut out = self.features.clone();
        if d == 0 {
            return out;
        }
        for row in out.chunks_exact_mut(d) {
            let s: f32 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        out
    }

    /// Induced sub-dataset on `keep` (sorted, unique). Labels are compacted
    /// so that classes without surviving nodes disappear, preserving class
    /// order.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let d = self.num_features;
        let mut features = Vec::with_capacity(keep.len() * d);
        for &i in keep {
            features.extend_from_slice(self.feature_row(i));
        }
        let old_labels: Vec<u32> = keep.iter().map(|&i| self.labels[i]).collect();
        let mut present = vec![false; self.num_classes()];
        for &l in &old_labels {
            present[l as usize] = true;
        }
        let mut remap = vec![u32::MAX; self.num_classes()];
        let mut class_names = Vec::new();
        for (c, &p) in present.iter().enumerate() {
            if p {
                remap[c] = class_names.len() as u32;
                class_names.push(self.class_names[c].clone());
            }
        }
        Self {
            name: self.name.clone(),
            adjacency: self.adjacency.induced(keep),
            features,
            num_features: d,
            labels: old_labels.iter().map(|&l| remap[l as usize]).collect(),
            class_names,
            feature_norm: self.feature_norm,
        }
    }

    /// Relabels nodes: old node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let n = self.num_nodes();
        let d = self.num_features;
        let mut features = vec![0.0f32; n * d];
        let mut labels = vec![0u32; n];
        for i in 0..n {
            features[perm[i] * d..(perm[i] + 1) * d].copy_from_slice(self.feature_row(i));
            labels[perm[i]] = self.labels[i];
        }
        Self {
            name: self.name.clone(),
            adjacency: self.adjacency.permute(perm),
            features,
            num_features: d,
            labels,
            class_names: self.class_names.clone(),
            feature_norm: self.feature_norm,
        }
    }

    pub fn with_adjacency(&self, adjacency: SparseAdjacency) -> Self {
        assert_eq!(adjacency.num_nodes(), self.num_nodes());
        Self {
            adjacency,
            ..self.clone()
        }
    }
}

/// Summary statistics of a preprocessed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub classes: usize,
    pub features: usize,
    pub nodes: usize,
    /// Undirected pairs, self-loops excluded.
    pub edges: usize,
    /// `classes * 20 / nodes`.
    pub label_rate: f64,
    /// `edges / (nodes^2 / 2)`.
    pub edge_density: f64,
}

impl DatasetStats {
    /// `edges / (2 * nodes^2)`, the convention behind commonly quoted density
    /// figures for these graphs. Reported next to `edge_density`.
    pub fn edge_density_table_convention(&self) -> f64 {
        self.edges as f64 / (2.0 * (self.nodes as f64).powi(2))
    }
}

pub fn dataset_stats(ds: &Dataset) -> DatasetStats {
    let nodes = ds.num_nodes();
    let edges = ds.adjacency.num_undirected_edges();
    let classes = ds.num_classes();
    let n = nodes as f64;
    DatasetStats {
        classes,
        features: ds.num_features,
        nodes,
        edges,
        label_rate: (classes * 20) as f64 / n,
        edge_density: edges as f64 / (0.5 * n * n),
    }
}

pub fn symmetrize(ds: &Dataset) -> Dataset {
    ds.with_adjacency(ds.adjacency.symmetrize())
}

pub fn add_self_loops(ds: &Dataset) -> Dataset {
    ds.with_adjacency(ds.adjacency.add_self_loops())
}

/// Restricts to the largest connected component. Ties go to the component
/// containing the smallest node index.
pub fn largest_connected_component(ds: &Dataset) -> Result<Dataset> {
    if ds.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let comps = ds.adjacency.connected_components();
    let mut best = &comps[0];
    for c in &comps[1..] {
        if c.len() > best.len() {
            best = c;
        }
    }
    Ok(ds.induced(best))
}

/// Drops every node whose class has fewer than `min_count` members.
pub fn filter_small_classes(ds: &Dataset, min_count: usize) -> Result<Dataset> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be >= 1".into()));
    }
    let counts = ds.class_counts();
    if counts.iter().all(|&c| c < min_count) {
        return Err(Error::AllClassesRemoved(min_count));
    }
    if counts.iter().all(|&c| c >= min_count) {
        return Ok(ds.clone());
    }
    let keep: Vec<usize> = (0..ds.num_nodes())
        .filter(|&i| counts[ds.labels[i] as usize] >= min_count)
        .collect();
    Ok(ds.induced(&keep))
}

/// Node/class/edge counts after one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub nodes: usize,
    pub classes: usize,
    pub stored_entries: usize,
}

impl StageRecord {
    fn of(stage: &str, ds: &Dataset) -> Self {
        Self {
            stage: stage.to_string(),
            nodes: ds.num_nodes(),
            classes: ds.num_classes(),
            stored_entries: ds.adjacency.nnz(),
        }
    }
}

/// Output of [`preprocess`].
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub provenance: Vec<StageRecord>,
}

/// symmetrize -> (filter small classes -> largest component)* -> self-loops.
///
/// Class filtering and component extraction repeat until neither changes the
/// graph, since dropping nodes from the component can push a class below
/// `min_class_count`. The fixed point makes the pipeline idempotent.
pub fn preprocess(ds: &Dataset, min_class_count: usize) -> Result<Preprocessed> {
    let mut log = vec![StageRecord::of("raw", ds)];
    let mut cur = symmetrize(ds);
    log.push(StageRecord::of("symmetrize", &cur));
    loop {
        let before = cur.num_nodes();
        cur = filter_small_classes(&cur, min_class_count)?;
        log.push(StageRecord::of("filter_small_classes", &cur));
        cur = largest_connected_component(&cur)?;
        log.push(StageRecord::of("largest_connected_component", &cur));
        if cur.num_nodes() == before {
            break;
        }
    }
    cur = add_self_loops(&cur);
    log.push(StageRecord::of("add_self_loops", &cur));
    Ok(Preprocessed {
        dataset: cur,
        provenance: log,
    })
}
