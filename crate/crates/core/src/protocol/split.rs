use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::rng::{RngStream, StreamKey};

/// Per-class sizes of the labelled sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train_per_class: usize,
    pub val_per_class: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train_per_class: 20,
            val_per_class: 30,
        }
    }
}

/// Disjoint, sorted train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    #[serde(default)]
    pub split_id: usize,
    /// Seed the split was derived from; `None` for splits read from a file.
    #[serde(default)]
    pub experiment_seed: Option<u64>,
}

impl Split {
    /// Checks ranges and pairwise disjointness.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut owner = vec![None; num_nodes];
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in set.iter() {
                if i >= num_nodes {
                    return Err(Error::InvalidSplit(format!(
                        "{name} index {i} out of range for {num_nodes} nodes"
                    )));
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::InvalidSplit(format!("node {i} appears in {prev} and {name}")));
                }
                owner[i] = Some(name);
            }
        }
        Ok(())
    }

    fn sorted(mut self) -> Self {
        self.train.sort_unstable();
        self.val.sort_unstable();
        self.test.sort_unstable();
        self
    }
}

/// Stream used to draw split `split_id` of `dataset`.
pub fn split_stream(experiment_seed: u64, dataset: &str, split_id: usize) -> RngStream {
    RngStream::derive(
        experiment_seed,
        &[
            StreamKey::from("split"),
            StreamKey::from(dataset),
            StreamKey::from(split_id),
        ],
    )
}

/// Standard 20/30/rest split.
pub fn generate_split(ds: &Dataset, experiment_seed: u64, split_id: usize) -> Result<Split> {
    generate_split_with(ds, experiment_seed, split_id, SplitSizes::default())
}

/// Per class, shuffles the class's nodes and takes the first
/// `train_per_class` for training and the next `val_per_class` for
/// validation. Every other node is a test node.
pub fn generate_split_with(ds: &Dataset, experiment_seed: u64, split_id: usize, sizes: SplitSizes) -> Result<Split> {
    let need = sizes.train_per_class + sizes.val_per_class;
    let by_class = ds.nodes_by_class();
    for (class, nodes) in by_class.iter().enumerate() {
        if nodes.len() < need {
            return Err(Error::ClassTooSmall {
                class,
                count: nodes.len(),
                required: need,
            });
        }
    }
    let mut rng = split_stream(experiment_seed, &ds.name, split_id);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        split_id,
        experiment_seed: Some(experiment_seed),
    };
    for mut nodes in by_class {
        rng.shuffle(&mut nodes);
        split.train.extend_from_slice(&nodes[..sizes.train_per_class]);
        split.val.extend_from_slice(&nodes[sizes.train_per_class..need]);
        split.test.extend_from_slice(&nodes[need..]);
    }
    Ok(split.sorted())
}

#[derive(Deserialize)]
struct SplitFile {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// Reads a JSON split file `{"train": [...], "val": [...], "test": [...]}`
/// and validates it against `num_nodes`. Per-class counts are not enforced.
pub fn load_fixed_split(path: &Path, num_nodes: usize) -> Result<Split> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: SplitFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let split = Split {
        train: f.train,
        val: f.val,
        test: f.test,
        split_id: 0,
        experiment_seed: None,
    }
    .sorted();
    split.validate(num_nodes)?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synthetic::{planted_partition, SyntheticConfig};

    fn ds() -> Dataset {
        planted_partition(&SyntheticConfig::default()).unwrap()
    }

    #[test]
    fn counts_and_complement() {
        let d = ds();
        let s = generate_split(&d, 7, 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 90, 90));
        s.validate(d.num_nodes()).unwrap();
        for c in 0..3u32 {
            assert_eq!(s.train.iter().filter(|&&i| d.labels[i] == c).count(), 20);
            assert_eq!(s.val.iter().filter(|&&i| d.labels[i] == c).count(), 30);
        }
    }

    #[test]
    fn deterministic_and_distinct() {
        let d = ds();
        assert_eq!(generate_split(&d, 7, 3).unwrap(), generate_split(&d, 7, 3).unwrap());
        assert_ne!(
            generate_split(&d, 7, 3).unwrap().train,
            generate_split(&d, 7, 4).unwrap().train
        );
    }

    #[test]
    fn boundary_class_of_fifty() {
        let cfg = SyntheticConfig {
            nodes_per_class: vec![50; 3],
            ..SyntheticConfig::default()
        };
        let d = planted_partition(&cfg).unwrap();
        let s = generate_split(&d, 1, 0).unwrap();
        assert!(s.test.is_empty());
        let small = SyntheticConfig {
            nodes_per_class: vec![50, 49, 50],
            ..SyntheticConfig::default()
        };
        assert!(matches!(
            generate_split(&planted_partition(&small).unwrap(), 1, 0),
            Err(Error::ClassTooSmall { count: 49, .. })
        ));
    }

    #[test]
    fn fixed_split_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("split.json");
        std::fs::write(&p, r#"{"train":[0],"val":[1],"test":[2]}"#).unwrap();
        let s = load_fixed_split(&p, 3).unwrap();
        assert_eq!((s.train, s.val, s.test), (vec![0], vec![1], vec![2]));
        std::fs::write(&p, r#"{"train":[0,1],"val":[1],"test":[2]}"#).unwrap();
        assert!(matches!(load_fixed_split(&p, 3), Err(Error::InvalidSplit(_))));
        std::fs::write(&p, r#"{"train":[0],"val":[1],"test":[3]}"#).unwrap();
        assert!(matches!(load_fixed_split(&p, 3), Err(Error::InvalidSplit(_))));
        assert!(matches!(
            load_fixed_split(&dir.path().join("none.json"), 3),
            Err(Error::MissingFile(_))
        ));
    }
}
