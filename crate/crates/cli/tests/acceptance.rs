//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion.
//!
//! Criteria 1 and 2 need the standardized CORA and CiteSeer graphs under
//! `$GNNBENCH_DATA_DIR/{cora,citeseer}` (default `<workspace>/data`), as a
//! container or edge-list bundle. Without them those two criteria print
//! `FAIL (blocked: ...)` and do not affect the exit status; any other
//! failure makes the target fail.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gnnbench::graph::synthetic::{planted_partition, SyntheticConfig};
use gnnbench::graph::{preprocess, Dataset};
use gnnbench::models::{build_model, check_gradients, param_count, GraphContext, ModelKind, ModelSpec, ParamStore};
use gnnbench::protocol::{
    aggregate, average_rank, average_ranks, generate_split, relative_accuracy, run_loaded, DatasetSource,
    ExperimentPlan, LoadedDataset, ResultRecord, ResultTable, SplitSizes, CORA_DIMS,
};
use gnnbench::report::split_sensitivity_report;
use gnnbench::trainer::{simulate_early_stopping, TrainConfig};
use gnnbench::RngStream;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::json;

enum Status {
    Pass,
    Fail,
    Blocked(String),
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn data_dir() -> PathBuf {
    std::env::var_os("GNNBENCH_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            Path::new(env!("CARGO_MANIFEST_DIR"))
                .parent()
                .unwrap()
                .parent()
                .unwrap()
                .join("data")
        })
}

fn load_real(name: &str) -> Result<LoadedDataset, String> {
    let dir = data_dir().join(name);
    if !dir.exists() {
        return Err(format!("{} not found", dir.display()));
    }
    // Raw bundles carry no normalization flag; the citation features are
    // row-normalized.
    let src = DatasetSource {
        name: Some(name.into()),
        feature_norm: (!dir.join("meta.json").is_file()).then_some(true),
        ..DatasetSource::path(&dir)
    };
    src.load().map_err(|e| format!("{}: {e}", dir.display()))
}

fn desk_run(data: &LoadedDataset, kinds: &[ModelKind]) -> BTreeMap<String, f64> {
    let plan = ExperimentPlan {
        datasets: vec![],
        models: kinds.iter().map(|&k| ModelSpec::reference(k)).collect(),
        num_splits: 10,
        num_inits: 3,
        experiment_seed: 2018,
        train_config: TrainConfig::default(),
        split_sizes: SplitSizes::default(),
    };
    let table = run_loaded(&plan, std::slice::from_ref(data), workers(), &|_| {}).expect("desk run");
    aggregate(&table)
        .into_iter()
        .map(|r| (r.model, 100.0 * r.mean))
        .collect()
}

fn criterion_1() -> Outcome {
    let cora = match load_real("cora") {
        Ok(d) => d,
        Err(e) => {
            return Outcome {
                status: Status::Blocked(e),
                detail: "real CORA graph required".into(),
            }
        }
    };
    let means = desk_run(&cora, &[ModelKind::Gcn, ModelKind::Mlp, ModelKind::LabelProp]);
    let bands = [("GCN", 79.0, 84.0), ("MLP", 54.0, 62.5), ("LabelProp", 70.0, 78.5)];
    let ok = bands.iter().all(|&(m, lo, hi)| (lo..=hi).contains(&means[m]));
    let detail = bands
        .iter()
        .map(|&(m, lo, hi)| format!("{m} {:.2} in [{lo}, {hi}]", means[m]))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::check(ok, detail)
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["cora", "citeseer"] {
        let d = match load_real(name) {
            Ok(d) => d,
            Err(e) => {
                return Outcome {
                    status: Status::Blocked(e),
                    detail: "real CORA and CiteSeer graphs required".into(),
                }
            }
        };
        let gnn = [ModelKind::Gcn, ModelKind::Gat, ModelKind::MoNet, ModelKind::GsMean];
        let base = [
            ModelKind::Mlp,
            ModelKind::LogReg,
            ModelKind::LabelProp,
            ModelKind::LabelPropNl,
        ];
        let kinds: Vec<ModelKind> = gnn.iter().chain(&base).cloned().collect();
        let means = desk_run(&d, &kinds);
        let lo = gnn.iter().map(|k| means[k.name()]).fold(f64::INFINITY, f64::min);
        let hi = base.iter().map(|k| means[k.name()]).fold(f64::NEG_INFINITY, f64::max);
        ok &= lo - hi >= 3.0;
        parts.push(format!(
            "{name}: min GNN {lo:.2} - max baseline {hi:.2} = {:.2}",
            lo - hi
        ));
    }
    Outcome::check(ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let table = [
        (ModelKind::Gcn, 92),
        (ModelKind::Gat, 92),
        (ModelKind::MoNet, 92),
        (ModelKind::GsMean, 92),
        (ModelKind::GsMaxPool, 94),
        (ModelKind::GsMeanPool, 58),
        (ModelKind::Mlp, 92),
        (ModelKind::LogReg, 10),
    ];
    let (d, c) = CORA_DIMS;
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, k) in table {
        let n = param_count(&ModelSpec::reference(kind), d, c);
        ok &= (n as f64 / 1000.0).round() as usize == k;
        parts.push(format!("{kind} {n}"));
    }
    Outcome::check(ok, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let mut fixed: Vec<Dataset> = Vec::new();
    for name in ["cora", "citeseer"] {
        if let Ok(d) = load_real(name) {
            fixed.push((*d.dataset).clone());
        }
    }
    let n_fixed = fixed.len();
    let strategy = (
        prop::collection::vec(50usize..90, 2..6),
        any::<u64>(),
        any::<u64>(),
        0usize..1000,
        0usize..=n_fixed,
    );
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let res = runner.run(&strategy, |(sizes, graph_seed, seed, split_id, pick)| {
        let ds = if pick < n_fixed {
            fixed[pick].clone()
        } else {
            let cfg = SyntheticConfig {
                nodes_per_class: sizes,
                num_features: 30,
                avg_degree: 2.0,
                seed: graph_seed,
                ..SyntheticConfig::default()
            };
            planted_partition(&cfg).unwrap()
        };
        let s = generate_split(&ds, seed, split_id).unwrap();
        let c = ds.num_classes();
        let mut train = vec![0usize; c];
        let mut val = vec![0usize; c];
        for &i in &s.train {
            train[ds.labels[i] as usize] += 1;
        }
        for &i in &s.val {
            val[ds.labels[i] as usize] += 1;
        }
        prop_assert!(train.iter().all(|&k| k == 20), "train counts {:?}", train);
        prop_assert!(val.iter().all(|&k| k == 30), "val counts {:?}", val);
        let mut seen = vec![0u8; ds.num_nodes()];
        for &i in s.train.iter().chain(&s.val).chain(&s.test) {
            seen[i] += 1;
        }
        prop_assert!(seen.iter().all(|&k| k == 1), "sets are not a partition");
        Ok(())
    });
    Outcome::check(
        res.is_ok(),
        match res {
            Ok(()) => format!("1000 cases, {n_fixed} real datasets plus random synthetic graphs"),
            Err(e) => e.to_string(),
        },
    )
}

fn criterion_5() -> Outcome {
    let cfg = SyntheticConfig {
        nodes_per_class: vec![8, 8, 8],
        num_features: 10,
        avg_degree: 3.0,
        words_per_node: 4,
        topic_words: 3,
        seed: 5,
        ..SyntheticConfig::default()
    };
    let ds = preprocess(&planted_partition(&cfg).unwrap(), 1).unwrap().dataset;
    let g = GraphContext::<f64>::new(&ds).unwrap();
    let mask: Vec<usize> = (0..ds.num_nodes()).step_by(2).collect();
    let mut worst = 0.0f64;
    let mut ok = ds.num_nodes() <= 30;
    let mut parts = Vec::new();
    for kind in ModelKind::TRAINABLE {
        let mut spec = ModelSpec::reference(kind);
        spec.hidden_size = match kind {
            ModelKind::Gat => 8,
            ModelKind::MoNet => 6,
            _ => 5,
        };
        spec.pool_size = 3;
        spec.output_heads = if kind == ModelKind::Gat { 2 } else { 1 };
        spec.feature_dropout = if kind == ModelKind::LogReg { 0.0 } else { 0.3 };
        spec.attention_dropout = if kind == ModelKind::Gat { 0.2 } else { 0.0 };
        spec.l2_strength = 0.05;
        let mut rng = RngStream::from_seed(77);
        let mut ps: ParamStore<f64> = build_model(&spec, ds.num_features, ds.num_classes(), &mut rng).unwrap();
        for e in ps.entries_mut() {
            for v in e.tensor.data_mut() {
                *v = 2.0 * rng.uniform() - 1.0;
            }
        }
        let rep = check_gradients(&spec, &ps, &g, &mask, 1234, 1e-6, 1e-6).unwrap();
        ok &= rep.max_rel_error < 1e-4 && rep.checked == param_count(&spec, ds.num_features, ds.num_classes());
        worst = worst.max(rep.max_rel_error);
        parts.push(format!("{kind} {:.1e}", rep.max_rel_error));
    }
    Outcome::check(
        ok,
        format!(
            "{} nodes, max rel err {worst:.2e} ({})",
            ds.num_nodes(),
            parts.join(", ")
        ),
    )
}

/// Stops at the first epoch that is `patience` epochs past the first
/// occurrence of the running minimum.
fn reference_early_stopping(losses: &[f64], patience: usize, max_epochs: usize) -> (usize, usize) {
    let cap = losses.len().min(max_epochs);
    let first_min = |e: usize| {
        let m = losses[..e].iter().cloned().fold(f64::INFINITY, f64::min);
        losses[..e].iter().position(|&x| x == m).unwrap() + 1
    };
    for e in 1..=cap {
        let b = first_min(e);
        if e - b >= patience {
            return (e, b);
        }
    }
    (cap, first_min(cap))
}

fn criterion_6() -> Outcome {
    let mut rng = RngStream::from_seed(6);
    let mut mismatches = 0;
    let mut stopped = 0;
    for case in 0..10_000 {
        let len = 1 + rng.below(250) as usize;
        let patience = 1 + rng.below(60) as usize;
        let max_epochs = 1 + rng.below(300) as usize;
        let levels = 2 + rng.below(12);
        let mut x = 1.0;
        let losses: Vec<f64> = (0..len)
            .map(|_| match case % 3 {
                0 => rng.below(levels) as f64,
                1 => {
                    x += rng.uniform() - 0.55;
                    x
                }
                _ => 1.0 / (1.0 + rng.below(levels) as f64) + (rng.below(4) as f64) * 0.25,
            })
            .collect();
        let got = simulate_early_stopping(&losses, patience, max_epochs);
        let want = reference_early_stopping(&losses, patience, max_epochs);
        if got != want {
            mismatches += 1;
        }
        if got.0 < losses.len().min(max_epochs) {
            stopped += 1;
        }
    }
    Outcome::check(
        mismatches == 0,
        format!("10000 sequences, {mismatches} mismatches, {stopped} stopped early"),
    )
}

fn brute_metrics(records: &[ResultRecord]) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut cells: BTreeMap<(String, usize), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.dataset.clone(), r.split_id))
            .or_default()
            .entry(r.model.clone())
            .or_default()
            .push(r.test_accuracy);
    }
    let mut rel: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rank: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for models in cells.values() {
        let means: BTreeMap<&String, f64> = models
            .iter()
            .map(|(m, v)| (m, v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        let best = means.values().cloned().fold(0.0, f64::max);
        for (m, &v) in &means {
            rel.entry((*m).clone())
                .or_default()
                .push(if best > 0.0 { 100.0 * v / best } else { 100.0 });
            let greater = means.values().filter(|&&o| o > v).count() as f64;
            let equal = means.values().filter(|&&o| o == v).count() as f64;
            rank.entry((*m).clone())
                .or_default()
                .push(1.0 + greater + (equal - 1.0) / 2.0);
        }
    }
    let avg = |m: BTreeMap<String, Vec<f64>>| {
        m.into_iter()
            .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    };
    (avg(rel), avg(rank))
}

fn criterion_7() -> Outcome {
    let mut rng = RngStream::from_seed(7);
    let mut bad = 0;
    let mut tie_cells = 0;
    for _ in 0..1000 {
        let n_models = 2 + rng.below(5) as usize;
        let n_data = 1 + rng.below(3) as usize;
        let n_splits = 1 + rng.below(4) as usize;
        let n_inits = 1 + rng.below(3) as usize;
        let mut records = Vec::new();
        for d in 0..n_data {
            for s in 0..n_splits {
                let mut prev: Option<Vec<f64>> = None;
                for m in 0..n_models {
                    if rng.uniform() < 0.1 {
                        continue;
                    }
                    let accs: Vec<f64> = match &prev {
                        Some(p) if rng.uniform() < 0.3 => {
                            tie_cells += 1;
                            p.clone()
                        }
                        _ => (0..n_inits).map(|_| rng.below(17) as f64 / 16.0).collect(),
                    };
                    for (i, &a) in accs.iter().enumerate() {
                        records.push(ResultRecord {
                            dataset: format!("d{d}"),
                            model: format!("m{m}"),
                            split_id: s,
                            init_id: i,
                            test_accuracy: a,
                            val_accuracy: 0.0,
                            best_epoch: 0,
                            wall_seconds: 0.0,
                            diverged: false,
                            deterministic: false,
                        });
                    }
                    prev = Some(accs);
                }
            }
        }
        if records.is_empty() {
            continue;
        }
        rng.shuffle(&mut records);
        let (want_rel, want_rank) = brute_metrics(&records);
        let table = ResultTable::new(records);
        let rel = relative_accuracy(&table).scores;
        let rank = average_rank(&table).scores;
        let close = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| {
            a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| (v - w).abs() < 1e-9))
        };
        if !close(&rel, &want_rel) || !close(&rank, &want_rank) {
            bad += 1;
        }
    }
    let example = average_ranks(&[0.8, 0.8, 0.7]) == vec![1.5, 1.5, 3.0];
    Outcome::check(
        bad == 0 && example,
        format!(
            "1000 tables, {bad} mismatches, {tie_cells} tied entries, [0.8,0.8,0.7] -> {:?}",
            average_ranks(&[0.8, 0.8, 0.7])
        ),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let small = |kind: &str, extra: serde_json::Value| {
        let mut v = json!({"kind": kind, "hidden_size": 16});
        v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
        v
    };
    let plan = json!({
        "datasets": [{"synthetic": common::synthetic("synA", 1)}, {"synthetic": common::synthetic("synB", 2)}],
        "models": [
            small("GCN", json!({})),
            small("GAT", json!({"heads": 4})),
            small("MoNet", json!({"heads": 2})),
            small("GS-maxpool", json!({"pool_size": 8})),
            small("MLP", json!({})),
            {"kind": "LogReg", "learning_rate": 0.1},
            {"kind": "LabelProp"}
        ],
        "num_splits": 3,
        "num_inits": 2,
        "experiment_seed": 42,
        "train_config": {"max_epochs": 80, "patience": 15}
    });
    let p = dir.path().join("plan.json");
    common::write_json(&p, &plan);
    let mut outputs = Vec::new();
    for w in ["1", "3", "8"] {
        let out = dir.path().join(format!("w{w}"));
        let o = common::run(&[
            "benchmark",
            "--config",
            p.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            w,
        ]);
        if !o.status.success() {
            return Outcome::check(
                false,
                format!("--workers {w} failed: {}", String::from_utf8_lossy(&o.stderr)),
            );
        }
        outputs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count() - 1;
    Outcome::check(
        outputs.windows(2).all(|w| w[0] == w[1]) && rows == 2 * 7 * 3 * 2,
        format!(
            "--workers 1/3/8, {rows} rows, byte-identical: {}",
            outputs.windows(2).all(|w| w[0] == w[1])
        ),
    )
}

fn top_models(table: &ResultTable) -> BTreeMap<String, String> {
    let mut best: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for r in aggregate(table) {
        let e = best
            .entry(r.dataset.clone())
            .or_insert((f64::NEG_INFINITY, String::new()));
        if r.mean > e.0 || (r.mean == e.0 && r.model < e.1) {
            *e = (r.mean, r.model);
        }
    }
    best.into_iter().map(|(d, (_, m))| (d, m)).collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SyntheticConfig {
        name: "syn".into(),
        nodes_per_class: vec![70, 70, 70],
        num_features: 90,
        homophily: 0.75,
        topic_strength: 0.35,
        seed: 9,
        ..SyntheticConfig::default()
    };
    let ds = preprocess(&planted_partition(&cfg).unwrap(), 50).unwrap().dataset;
    let fixed = generate_split(&ds, 999, 0).unwrap();
    let split_path = dir.path().join("fixed.json");
    common::write_json(
        &split_path,
        &json!({"train": fixed.train, "val": fixed.val, "test": fixed.test}),
    );
    let models: Vec<ModelSpec> = [ModelKind::Gcn, ModelKind::Mlp, ModelKind::LabelProp, ModelKind::LogReg]
        .iter()
        .map(|&k| ModelSpec {
            hidden_size: 16,
            ..ModelSpec::reference(k)
        })
        .collect();
    let run = |source: DatasetSource, splits: usize| {
        let plan = ExperimentPlan {
            datasets: vec![source],
            models: models.clone(),
            num_splits: splits,
            num_inits: 2,
            experiment_seed: 3,
            train_config: TrainConfig {
                max_epochs: 150,
                patience: 20,
                ..TrainConfig::default()
            },
            split_sizes: SplitSizes::default(),
        };
        gnnbench::protocol::run_experiment(&plan, workers()).unwrap()
    };
    let random = run(DatasetSource::synthetic(cfg.clone()), 5);
    let fixed_table = run(
        DatasetSource {
            fixed_split: Some(split_path),
            ..DatasetSource::synthetic(cfg)
        },
        1,
    );
    let report =
        split_sensitivity_report(&[("fixed".into(), fixed_table.clone()), ("random".into(), random.clone())]).unwrap();
    let (tf, tr) = (top_models(&fixed_table), top_models(&random));
    let row = &report.rows[0];
    let agrees =
        row.flip == (tf["syn"] != tr["syn"]) && row.rankings[0].1[0] == tf["syn"] && row.rankings[1].1[0] == tr["syn"];

    let mk = |a: f64, b: f64| {
        ResultTable::new(
            [("GAT", a), ("GCN", b)]
                .iter()
                .map(|&(m, acc)| ResultRecord {
                    dataset: "cora".into(),
                    model: m.into(),
                    split_id: 0,
                    init_id: 0,
                    test_accuracy: acc,
                    val_accuracy: 0.0,
                    best_epoch: 0,
                    wall_seconds: 0.0,
                    diverged: false,
                    deterministic: false,
                })
                .collect(),
        )
    };
    let flip = split_sensitivity_report(&[("a".into(), mk(0.83, 0.81)), ("b".into(), mk(0.80, 0.82))]).unwrap();
    let same = split_sensitivity_report(&[("a".into(), mk(0.83, 0.81)), ("b".into(), mk(0.83, 0.81))]).unwrap();
    Outcome::check(
        agrees && flip.rows[0].flip && !same.rows[0].flip,
        format!(
            "synthetic: fixed top {}, random top {}, flip={}; constructed flip detected, identical tables not flagged",
            tf["syn"], tr["syn"], row.flip
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("CORA desk-scale accuracy bands", criterion_1),
        ("graph models beat baselines by >= 3 points", criterion_2),
        ("reference parameter counts round to 92K/94K/58K/10K", criterion_3),
        ("split protocol 20/30/complement", criterion_4),
        ("gradients match central differences", criterion_5),
        ("early stopping matches reference simulator", criterion_6),
        ("relative accuracy and rank oracles", criterion_7),
        ("results.csv independent of worker count", criterion_8),
        ("split-sensitivity flip detection", criterion_9),
    ];
    let mut hard_failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out.status {
            Status::Pass => println!("PASS [{}] {name}: {} ({secs:.1}s)", k + 1, out.detail),
            Status::Fail => {
                hard_failures += 1;
                println!("FAIL [{}] {name}: {} ({secs:.1}s)", k + 1, out.detail)
            }
            Status::Blocked(why) => println!("FAIL [{}] {name}: blocked, {why}; {}", k + 1, out.detail),
        }
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
