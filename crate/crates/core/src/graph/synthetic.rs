//! Planted-partition citation-style graphs with bag-of-words features.
//!
//! Used as test fixtures and for exercising the full pipeline without the
//! real citation datasets. Edges are homophilous with a tunable intra-class
//! fraction; each class owns a block of "topic" words that its nodes draw
//! from with probability `topic_strength`.

use serde::{Deserialize, Serialize};

use super::{Dataset, SparseAdjacency};
use crate::error::Result;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub name: String,
    pub nodes_per_class: Vec<usize>,
    pub num_features: usize,
    /// Expected number of undirected edges per node.
    pub avg_degree: f64,
    /// Probability that an edge stays inside the class.
    pub homophily: f64,
    pub words_per_node: usize,
    /// Topic block width per class.
    pub topic_words: usize,
    /// Probability that a word is drawn from the node's class topic.
    pub topic_strength: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            nodes_per_class: vec![80; 3],
            num_features: 120,
            avg_degree: 4.0,
            homophily: 0.85,
            words_per_node: 8,
            topic_words: 20,
            topic_strength: 0.5,
            seed: 0,
        }
    }
}

/// Generates a raw (directed, unprocessed) dataset.
pub fn planted_partition(cfg: &SyntheticConfig) -> Result<Dataset> {
    let mut rng = RngStream::derive(cfg.seed, &["synthetic".into(), cfg.name.as_str().into()]);
    let c = cfg.nodes_per_class.len();
    let mut labels = Vec::new();
    for (k, &m) in cfg.nodes_per_class.iter().enumerate() {
        labels.extend(std::iter::repeat(k as u32).take(m));
    }
    let n = labels.len();
    let by_class: Vec<Vec<usize>> = (0..c)
        .map(|k| (0..n).filter(|&i| labels[i] as usize == k).collect())
        .collect();

    let mut edges = Vec::new();
    let half = cfg.avg_degree / 2.0;
    for i in 0..n {
        let whole = half.floor() as usize;
        let extra = usize::from(rng.uniform() < half - half.floor());
        for _ in 0..whole + extra {
            let j = if rng.uniform() < cfg.homophily {
                let pool = &by_class[labels[i] as usize];
                pool[rng.below(pool.len() as u64) as usize]
            } else {
                rng.below(n as u64) as usize
            };
            if j != i {
                edges.push((i, j));
            }
        }
    }

    let d = cfg.num_features;
    let mut features = vec![0.0f32; n * d];
    for i in 0..n {
        let start = (labels[i] as usize * cfg.topic_words) % d.max(1);
        for _ in 0..cfg.words_per_node {
            let w = if rng.uniform() < cfg.topic_strength {
                (start + rng.below(cfg.topic_words as u64) as usize) % d
            } else {
                rng.below(d as u64) as usize
            };
            features[i * d + w] = 1.0;
        }
    }

    Dataset::new(
        cfg.name.clone(),
        SparseAdjacency::from_edges(n, &edges)?,
        features,
        d,
        labels,
        (0..c).map(|k| format!("class_{k}")).collect(),
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SyntheticConfig::default();
        let a = planted_partition(&cfg).unwrap();
        let b = planted_partition(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_nodes(), 240);
        assert_eq!(a.class_counts(), vec![80, 80, 80]);
    }
}
