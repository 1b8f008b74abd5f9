use gnnbench::graph::synthetic::{planted_partition, SyntheticConfig};
use gnnbench::models::{ModelKind, ModelSpec};
use gnnbench::protocol::{
    average_rank, generate_split, grid_search, relative_accuracy, run_experiment, DatasetSource, ExperimentPlan,
    GridSearchPlan, GridSpace, ResultRecord, ResultTable, SplitSizes,
};
use gnnbench::trainer::TrainConfig;
use proptest::prelude::*;

fn source() -> DatasetSource {
    DatasetSource {
        min_class_count: 1,
        ..DatasetSource::synthetic(SyntheticConfig {
            nodes_per_class: vec![30, 30],
            num_features: 40,
            ..SyntheticConfig::default()
        })
    }
}

fn plan(models: Vec<ModelSpec>) -> ExperimentPlan {
    ExperimentPlan {
        datasets: vec![source()],
        models,
        num_splits: 2,
        num_inits: 3,
        experiment_seed: 11,
        train_config: TrainConfig {
            max_epochs: 15,
            patience: 5,
            ..TrainConfig::default()
        },
        split_sizes: SplitSizes {
            train_per_class: 5,
            val_per_class: 5,
        },
    }
}

fn small(kind: ModelKind) -> ModelSpec {
    ModelSpec {
        hidden_size: 16,
        ..ModelSpec::reference(kind)
    }
}

#[test]
fn cardinality_and_replication() {
    let p = plan(vec![small(ModelKind::Gcn), ModelSpec::reference(ModelKind::LabelProp)]);
    let t = run_experiment(&p, 2).unwrap();
    assert_eq!(t.len(), p.cardinality());
    let lp: Vec<&ResultRecord> = t.records.iter().filter(|r| r.model == "LabelProp").collect();
    assert_eq!(lp.len(), 6);
    assert!(lp.iter().all(|r| r.deterministic));
    for s in 0..2 {
        let accs: Vec<f64> = lp.iter().filter(|r| r.split_id == s).map(|r| r.test_accuracy).collect();
        assert!(accs.windows(2).all(|w| w[0] == w[1]));
    }
    assert!(t.records.iter().all(|r| (0.0..=1.0).contains(&r.test_accuracy)));
}

#[test]
fn results_independent_of_worker_count() {
    let p = plan(vec![small(ModelKind::Gat), small(ModelKind::GsMaxPool)]);
    let a = run_experiment(&p, 1).unwrap().without_timing();
    let b = run_experiment(&p, 4).unwrap().without_timing();
    let c = run_experiment(&p, 3).unwrap().without_timing();
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    assert_eq!(a, c);
}

#[test]
fn plan_json_roundtrip_and_validation() {
    let p = plan(vec![small(ModelKind::Gcn)]);
    let v = serde_json::to_value(&p).unwrap();
    assert_eq!(ExperimentPlan::from_value(v).unwrap(), p);
    let dup = plan(vec![small(ModelKind::Gcn), small(ModelKind::Gcn)]);
    assert!(dup.validate().is_err());
    let mut zero = p.clone();
    zero.num_inits = 0;
    assert!(zero.validate().is_err());
}

#[test]
fn two_point_grid_picks_better_config() {
    let data = vec![source().load().unwrap()];
    let grid = GridSpace {
        hidden_sizes: vec![16],
        learning_rates: vec![1e-6, 0.05],
        dropouts: vec![0.2],
        l2_strengths: vec![1e-3],
        ..GridSpace::default()
    };
    let gp = GridSearchPlan {
        grid,
        num_splits: 2,
        num_inits: 1,
        experiment_seed: 3,
        train_config: TrainConfig {
            max_epochs: 60,
            patience: 20,
            ..TrainConfig::default()
        },
        split_sizes: SplitSizes {
            train_per_class: 5,
            val_per_class: 5,
        },
        param_budget: None,
        budget_dims: (1433, 7),
    };
    let res = grid_search(&data, &ModelSpec::reference(ModelKind::Gcn), &gp, 2).unwrap();
    assert_eq!(res.ranking.len(), 2);
    assert!(res.ranking[0].score >= res.ranking[1].score);
    assert_eq!(res.best.learning_rate, res.ranking[0].spec.learning_rate);
    assert_eq!(res.best.learning_rate, 0.05);
}

#[test]
fn grid_budget_can_empty_the_grid() {
    let data = vec![source().load().unwrap()];
    let gp = GridSearchPlan {
        grid: GridSpace::default(),
        num_splits: 1,
        num_inits: 1,
        experiment_seed: 3,
        train_config: TrainConfig::default(),
        split_sizes: SplitSizes::default(),
        param_budget: Some(10),
        budget_dims: (1433, 7),
    };
    assert!(matches!(
        grid_search(&data, &ModelSpec::reference(ModelKind::Gcn), &gp, 1),
        Err(gnnbench::Error::EmptyGrid)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_splits_are_exact(
        sizes in prop::collection::vec(50usize..90, 2..5),
        seed in any::<u64>(),
        split_id in 0usize..1000,
    ) {
        let ds = planted_partition(&SyntheticConfig {
            nodes_per_class: sizes.clone(),
            num_features: 8,
            seed,
            ..SyntheticConfig::default()
        }).unwrap();
        let s = generate_split(&ds, seed, split_id).unwrap();
        let mut seen = vec![0u8; ds.num_nodes()];
        for set in [&s.train, &s.val, &s.test] {
            prop_assert!(set.windows(2).all(|w| w[0] < w[1]));
            for &i in set.iter() {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for (k, _) in sizes.iter().enumerate() {
            let k = k as u32;
            prop_assert_eq!(s.train.iter().filter(|&&i| ds.labels[i] == k).count(), 20);
            prop_assert_eq!(s.val.iter().filter(|&&i| ds.labels[i] == k).count(), 30);
        }
    }
}

fn random_table(cells: &[(usize, usize)], models: usize, inits: usize, vals: &[u8]) -> ResultTable {
    let mut recs = Vec::new();
    let mut k = 0;
    for &(d, s) in cells {
        for m in 0..models {
            for i in 0..inits {
                recs.push(ResultRecord {
                    dataset: format!("d{d}"),
                    model: format!("m{m}"),
                    split_id: s,
                    init_id: i,
                    test_accuracy: vals[k % vals.len()] as f64 / 20.0,
                    val_accuracy: 0.0,
                    best_epoch: 0,
                    wall_seconds: 0.0,
                    diverged: false,
                    deterministic: false,
                });
                k += 1;
            }
        }
    }
    ResultTable::new(recs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rank_is_ordinal(vals in prop::collection::vec(1u8..=20, 1..60), models in 2usize..5) {
        let cells = [(0, 0), (0, 1), (1, 0)];
        // One init per cell, so the transform acts on the ranked values.
        let t = random_table(&cells, models, 1, &vals);
        let mut u = t.clone();
        u.records.iter_mut().for_each(|r| r.test_accuracy = (3.0 * r.test_accuracy).exp());
        let a = average_rank(&t).scores;
        let b = average_rank(&u).scores;
        for (m, r) in &a {
            prop_assert!(*r >= 1.0 && *r <= models as f64);
            prop_assert!((r - b[m]).abs() < 1e-12);
        }
        let rel = relative_accuracy(&t).scores;
        prop_assert!(rel.values().all(|&v| v <= 100.0 + 1e-9));
    }
}
