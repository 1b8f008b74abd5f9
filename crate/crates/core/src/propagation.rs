//! Label propagation baselines that use only the graph structure.
//!
//! Starting from `Y0` (one-hot rows for training nodes, zero elsewhere) the
//! score matrix is iterated as `Y <- (1 - alpha) P Y + alpha Y0` with either
//! the random-walk operator `D^-1 A` (training rows re-clamped every step) or
//! the symmetric operator `D^-1/2 A D^-1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, SparseAdjacency};
use crate::protocol::Split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    RowNormalized,
    SymmetricNormalized,
}

/// Tunables shared by both propagation variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelPropParams {
    /// Return probability to the initial labels, in `(0, 1)`.
    pub alpha: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for LabelPropParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            max_iters: 50,
            tolerance: 1e-6,
        }
    }
}

impl LabelPropParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_mode(self, mode: PropagationMode) -> PropagationConfig {
        PropagationConfig {
            mode,
            alpha: self.alpha,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub mode: PropagationMode,
    pub alpha: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl PropagationConfig {
    pub fn new(mode: PropagationMode) -> Self {
        LabelPropParams::default().with_mode(mode)
    }

    fn params(&self) -> LabelPropParams {
        LabelPropParams {
            alpha: self.alpha,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOutcome {
    pub predictions: Vec<u32>,
    pub iterations: usize,
    /// Max-abs change of the score matrix after each iteration.
    pub changes: Vec<f64>,
}

/// Runs propagation on the dataset graph, seeded by the split's training
/// nodes.
pub fn label_propagate(ds: &Dataset, split: &Split, cfg: &PropagationConfig) -> Result<PropagationOutcome> {
    propagate(&ds.adjacency, &ds.labels, ds.num_classes(), &split.train, cfg)
}

/// Graph-level entry point. Nodes whose score row stays all-zero are given the
/// majority training label (lowest class on ties).
pub fn propagate(
    adj: &SparseAdjacency,
    labels: &[u32],
    num_classes: usize,
    train: &[usize],
    cfg: &PropagationConfig,
) -> Result<PropagationOutcome> {
    cfg.params().validate()?;
    let n = adj.num_nodes();
    if labels.len() != n {
        return Err(Error::LengthMismatch(format!("{} labels for {n} nodes", labels.len())));
    }
    if train.is_empty() {
        return Err(Error::EmptyMask);
    }
    let c = num_classes;
    let mut y0 = vec![0.0f64; n * c];
    let mut is_train = vec![false; n];
    let mut counts = vec![0usize; c];
    for &i in train {
        if i >= n {
            return Err(Error::InvalidSplit(format!("train node {i} out of range")));
        }
        let l = labels[i] as usize;
        if l >= c {
            return Err(Error::LabelOutOfRange {
                node: i,
                label: labels[i],
                num_classes: c,
            });
        }
        y0[i * c + l] = 1.0;
        is_train[i] = true;
        counts[l] += 1;
    }
    if let Some(k) = counts.iter().position(|&v| v == 0) {
        return Err(Error::EmptyClass(k));
    }
    let deg: Vec<f64> = (0..n).map(|i| adj.degree(i) as f64).collect();
    let coef = |i: usize, j: usize| match cfg.mode {
        PropagationMode::RowNormalized => 1.0 / deg[i],
        PropagationMode::SymmetricNormalized => 1.0 / (deg[i] * deg[j]).sqrt(),
    };
    let clamp = cfg.mode == PropagationMode::RowNormalized;
    let mut y = y0.clone();
    let mut next = vec![0.0f64; n * c];
    let mut changes = Vec::new();
    for _ in 0..cfg.max_iters {
        for i in 0..n {
            let row = &mut next[i * c..(i + 1) * c];
            if clamp && is_train[i] {
                row.copy_from_slice(&y0[i * c..(i + 1) * c]);
                continue;
            }
            row.iter_mut().for_each(|v| *v = 0.0);
            for &j in adj.row(i) {
                let w = (1.0 - cfg.alpha) * coef(i, j);
                for (o, &v) in row.iter_mut().zip(&y[j * c..(j + 1) * c]) {
                    *o += w * v;
                }
            }
            for (o, &v) in row.iter_mut().zip(&y0[i * c..(i + 1) * c]) {
                *o += cfg.alpha * v;
            }
        }
        let change = y.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut y, &mut next);
        changes.push(change);
        if change < cfg.tolerance {
            break;
        }
    }
    let majority = argmax_lowest(&counts.iter().map(|&v| v as f64).collect::<Vec<_>>()) as u32;
    let predictions = (0..n)
        .map(|i| {
            let row = &y[i * c..(i + 1) * c];
            if row.iter().all(|&v| v == 0.0) {
                majority
            } else {
                argmax_lowest(row) as u32
            }
        })
        .collect();
    Ok(PropagationOutcome {
        predictions,
        iterations: changes.len(),
        changes,
    })
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, undirected: &[(usize, usize)]) -> SparseAdjacency {
        let mut e = Vec::new();
        for &(i, j) in undirected {
            e.push((i, j));
            e.push((j, i));
        }
        SparseAdjacency::from_edges(n, &e).unwrap().add_self_loops()
    }

    fn cfg(mode: PropagationMode) -> PropagationConfig {
        PropagationConfig::new(mode)
    }

    #[test]
    fn requires_every_class_in_train() {
        let a = adj(2, &[(0, 1)]);
        let out = propagate(&a, &[0, 1], 2, &[0], &cfg(PropagationMode::SymmetricNormalized));
        assert!(matches!(out, Err(Error::EmptyClass(1))));
    }

    #[test]
    fn path_b_takes_label_of_a() {
        // Node 2 is an isolated holder of class 1.
        let a = adj(3, &[(0, 1)]);
        let out = propagate(&a, &[0, 0, 1], 2, &[0, 2], &cfg(PropagationMode::SymmetricNormalized)).unwrap();
        assert_eq!(out.predictions, vec![0, 0, 1]);
    }

    #[test]
    fn disconnected_edges_keep_their_labels() {
        let a = adj(4, &[(0, 1), (2, 3)]);
        for mode in [PropagationMode::RowNormalized, PropagationMode::SymmetricNormalized] {
            let out = propagate(&a, &[0, 0, 1, 1], 2, &[0, 2], &cfg(mode)).unwrap();
            assert_eq!(out.predictions, vec![0, 0, 1, 1]);
        }
    }

    #[test]
    fn unreachable_node_gets_majority() {
        let a = adj(5, &[(0, 1), (1, 2)]);
        let out = propagate(
            &a,
            &[1, 1, 0, 0, 0],
            2,
            &[0, 1, 2],
            &cfg(PropagationMode::RowNormalized),
        )
        .unwrap();
        assert_eq!(out.predictions[3], 1);
        assert_eq!(out.predictions[4], 1);
    }

    #[test]
    fn clamped_train_nodes_keep_labels() {
        let a = adj(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]);
        let labels = [0, 1, 0, 1, 0, 1];
        let out = propagate(
            &a,
            &labels,
            2,
            &[0, 1, 2, 3, 4, 5],
            &cfg(PropagationMode::RowNormalized),
        )
        .unwrap();
        assert_eq!(out.predictions, labels.to_vec());
    }

    #[test]
    fn symmetric_changes_non_increasing() {
        let fixtures = [
            adj(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]),
            adj(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]),
        ];
        for a in &fixtures {
            let mut c = cfg(PropagationMode::SymmetricNormalized);
            c.tolerance = 0.0;
            c.max_iters = 40;
            let out = propagate(a, &[0, 1, 0, 1, 0, 1][..a.num_nodes()], 2, &[0, 1], &c).unwrap();
            for w in out.changes[1..].windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "{:?}", out.changes);
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let a = adj(2, &[(0, 1)]);
        let mut c = cfg(PropagationMode::RowNormalized);
        c.alpha = 1.0;
        assert!(propagate(&a, &[0, 0], 1, &[0], &c).is_err());
        c.alpha = 0.5;
        c.max_iters = 0;
        assert!(propagate(&a, &[0, 0], 1, &[0], &c).is_err());
    }
}
