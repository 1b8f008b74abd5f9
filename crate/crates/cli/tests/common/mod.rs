#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gnnbench"));
    c.env_remove("GNNBENCH_WORKERS");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gnnbench")
}

pub fn synthetic(name: &str, seed: u64) -> Value {
    json!({
        "name": name,
        "nodes_per_class": [60, 60, 60],
        "num_features": 90,
        "avg_degree": 4.0,
        "homophily": 0.85,
        "words_per_node": 6,
        "topic_words": 15,
        "topic_strength": 0.5,
        "seed": seed
    })
}

pub fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Two 5-node cliques joined by one edge, as an edge-list bundle.
pub fn two_cliques_bundle(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let mut edges = String::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push_str(&format!("{} {}\n", base + i, base + j));
            }
        }
    }
    edges.push_str("4 5\n");
    std::fs::write(dir.join("edges.txt"), edges).unwrap();
    let feats: String = (0..10).map(|i| if i < 5 { "1,0,0.5\n" } else { "0,1,0.5\n" }).collect();
    std::fs::write(dir.join("features.csv"), feats).unwrap();
    let labels: String = (0..10).map(|i| format!("{}\n", i / 5)).collect();
    std::fs::write(dir.join("labels.csv"), labels).unwrap();
}
