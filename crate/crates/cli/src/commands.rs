use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use gnnbench::graph::{dataset_stats, load_dataset, preprocess, write_container};
use gnnbench::models::{ModelKind, ModelSpec};
use gnnbench::propagation::label_propagate;
use gnnbench::protocol::{
    grid_search_with, plan_jobs, run_loaded, trial_stream, DatasetSource, ExperimentPlan, GridSearchPlan,
    LoadedDataset, ResultRecord, ResultTable, SplitSizes,
};
use gnnbench::report::{split_sensitivity_report, write_report};
use gnnbench::trainer::{accuracy_of_predictions, train as train_once, TrainConfig, TrainOutcome};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::overrides::apply_all;

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), e.line())))
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn load_all(sources: &[DatasetSource]) -> CliResult<Vec<LoadedDataset>> {
    sources
        .iter()
        .map(|s| {
            let d = s.load()?;
            eprintln!(
                "loaded {}: {} nodes, {} features, {} classes",
                d.name(),
                d.dataset.num_nodes(),
                d.dataset.num_features,
                d.dataset.num_classes()
            );
            Ok(d)
        })
        .collect()
}

/// Progress printer: one stderr line per finished trial.
fn progress_printer(total: usize) -> impl Fn(&[ResultRecord]) + Sync {
    let done = AtomicUsize::new(0);
    move |recs: &[ResultRecord]| {
        for r in recs {
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            eprintln!(
                "[{k}/{total}] {} {} split {} init {}: test {:.4}{}",
                r.dataset,
                r.model,
                r.split_id,
                r.init_id,
                r.test_accuracy,
                if r.diverged { " (diverged)" } else { "" }
            );
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    source: String,
    min_class_count: usize,
    stages: &'a [gnnbench::graph::StageRecord],
}

pub fn prepare(
    input: &Path,
    out: &Path,
    min_class_count: usize,
    name: Option<&str>,
    feature_norm: bool,
) -> CliResult<()> {
    let raw = load_dataset(input)?;
    let mut pre = preprocess(&raw, min_class_count)?;
    if let Some(n) = name {
        pre.dataset.name = n.to_string();
    }
    if feature_norm {
        pre.dataset.feature_norm = true;
    }
    write_container(&pre.dataset, out)?;
    let prov = Provenance {
        source: input.display().to_string(),
        min_class_count,
        stages: &pre.provenance,
    };
    write_text(
        &out.join("provenance.json"),
        &(serde_json::to_string_pretty(&prov).unwrap() + "\n"),
    )?;
    let stats = dataset_stats(&pre.dataset);
    let mut stats_json = serde_json::to_value(&stats).unwrap();
    stats_json["name"] = json!(pre.dataset.name);
    stats_json["edge_density_table_convention"] = json!(stats.edge_density_table_convention());
    write_text(
        &out.join("stats.json"),
        &(serde_json::to_string_pretty(&stats_json).unwrap() + "\n"),
    )?;
    for s in &pre.provenance {
        eprintln!(
            "{:<28} nodes {:>6}  classes {:>3}  entries {:>8}",
            s.stage, s.nodes, s.classes, s.stored_entries
        );
    }
    Ok(())
}

/// Everything `train` needs, after merging file, flags and overrides.
#[derive(Debug, Deserialize)]
struct TrainRequest {
    dataset: DatasetSource,
    model: ModelSpec,
    #[serde(default)]
    train_config: TrainConfig,
    #[serde(default)]
    split_sizes: SplitSizes,
    #[serde(default)]
    split_id: usize,
    #[serde(default)]
    init_id: usize,
    #[serde(default)]
    seed: u64,
}

pub struct TrainInput<'a> {
    pub config: Option<&'a Path>,
    pub dataset: Option<&'a Path>,
    pub model: Option<&'a str>,
    pub split_id: Option<usize>,
    pub init_id: Option<usize>,
    pub seed: Option<u64>,
    pub overrides: &'a [String],
}

pub fn train(input: TrainInput<'_>) -> CliResult<()> {
    let mut doc = match input.config {
        Some(p) => read_json(p)?,
        None => json!({}),
    };
    if let Some(d) = input.dataset {
        doc["dataset"] = serde_json::to_value(DatasetSource::path(d)).unwrap();
    }
    if let Some(m) = input.model {
        let kind: ModelKind = m.parse().map_err(CliError::config)?;
        doc["model"] = serde_json::to_value(ModelSpec::reference(kind)).unwrap();
    }
    for (key, v) in [("split_id", input.split_id), ("init_id", input.init_id)] {
        if let Some(v) = v {
            doc[key] = json!(v);
        }
    }
    if let Some(s) = input.seed {
        doc["seed"] = json!(s);
    }
    apply_all(&mut doc, input.overrides)?;
    let mut req: TrainRequest = serde_json::from_value(doc).map_err(CliError::config)?;
    if let Some(p) = input.config {
        req.dataset.resolve(base_dir(p));
    }
    req.model.validate().map_err(CliError::config)?;
    req.train_config.validate().map_err(CliError::config)?;

    let data = req.dataset.load()?;
    let split = data.split(req.seed, req.split_id, req.split_sizes)?;
    let outcome = if req.model.kind.is_propagation() {
        let start = std::time::Instant::now();
        let cfg = req.model.propagation_config().expect("propagation kind");
        let out = label_propagate(&data.dataset, &split, &cfg)?;
        let labels = &data.dataset.labels;
        TrainOutcome {
            best_epoch: 0,
            epochs_run: out.iterations,
            train_loss_curve: vec![],
            val_loss_curve: vec![],
            val_acc_curve: vec![],
            test_accuracy: accuracy_of_predictions(&out.predictions, labels, &split.test),
            val_accuracy: accuracy_of_predictions(&out.predictions, labels, &split.val),
            wall_seconds: start.elapsed().as_secs_f64(),
            diverged: false,
        }
    } else {
        let mut rng = trial_stream(req.seed, data.name(), req.model.label(), req.split_id, req.init_id);
        train_once(&req.model, &data.graph, &split, &req.train_config, &mut rng)?
    };
    eprintln!(
        "{} on {}: test {:.4}, val {:.4}, best epoch {} of {}",
        req.model.label(),
        data.name(),
        outcome.test_accuracy,
        outcome.val_accuracy,
        outcome.best_epoch,
        outcome.epochs_run
    );
    println!("{}", serde_json::to_string_pretty(&outcome).unwrap());
    if outcome.diverged {
        return Err(CliError::Runtime("training diverged".into()));
    }
    Ok(())
}

pub fn benchmark(
    config: &Path,
    out: &Path,
    workers: usize,
    seed: Option<u64>,
    record_timing: bool,
    overrides: &[String],
) -> CliResult<()> {
    let mut doc = read_json(config)?;
    if let Some(s) = seed {
        doc["experiment_seed"] = json!(s);
    }
    apply_all(&mut doc, overrides)?;
    let mut plan = ExperimentPlan::from_value(doc).map_err(CliError::config)?;
    plan.resolve_paths(base_dir(config));
    create_dir(out)?;
    let data = load_all(&plan.datasets)?;
    let total = plan.cardinality();
    let jobs = plan_jobs(data.len(), &plan.models, plan.num_splits, plan.num_inits).len();
    eprintln!("running {total} trials ({jobs} jobs) on {workers} workers");
    let table = run_loaded(&plan, &data, workers, &progress_printer(total))?;

    let mut timings = String::from("dataset,model,split_id,init_id,wall_seconds\n");
    for r in &table.records {
        timings.push_str(&format!(
            "{},{},{},{},{}\n",
            r.dataset, r.model, r.split_id, r.init_id, r.wall_seconds
        ));
    }
    write_text(&out.join("timings.csv"), &timings)?;
    let stored = if record_timing {
        table.clone()
    } else {
        table.without_timing()
    };
    stored.write_csv(&out.join("results.csv"))?;
    stored.write_json(&out.join("results.json"))?;
    let summary = write_report(&stored, out)?;
    eprint!("{}", summary.to_text());

    let failed = table.records.iter().filter(|r| r.diverged).count();
    if failed > 0 {
        eprintln!("{failed} of {} trials failed or diverged", table.len());
    }
    if failed == table.len() {
        return Err(CliError::Runtime("no trial succeeded".into()));
    }
    Ok(())
}

/// Grid-search configuration file: datasets, base model specs and the search
/// protocol.
#[derive(Debug, Deserialize)]
struct GridConfig {
    datasets: Vec<DatasetSource>,
    models: Vec<ModelSpec>,
    #[serde(flatten)]
    plan: GridSearchPlan,
}

pub fn grid_search(
    config: &Path,
    out: &Path,
    workers: usize,
    seed: Option<u64>,
    overrides: &[String],
) -> CliResult<()> {
    let mut doc = read_json(config)?;
    if let Some(s) = seed {
        doc["experiment_seed"] = json!(s);
    }
    apply_all(&mut doc, overrides)?;
    let mut cfg: GridConfig = serde_json::from_value(doc).map_err(CliError::config)?;
    if cfg.models.is_empty() || cfg.datasets.is_empty() {
        return Err(CliError::Usage(
            "grid search needs at least one dataset and one model".into(),
        ));
    }
    cfg.datasets.iter_mut().for_each(|d| d.resolve(base_dir(config)));
    create_dir(out)?;
    let data = load_all(&cfg.datasets)?;
    let mut best = BTreeMap::new();
    let mut rankings = BTreeMap::new();
    for base in &cfg.models {
        base.validate().map_err(CliError::config)?;
        let label = base.label().to_string();
        let n = cfg.plan.grid.configurations(base).len();
        eprintln!("grid search {label}: {n} configurations before the budget filter");
        let total = n * data.len() * cfg.plan.num_splits * cfg.plan.num_inits;
        let res = grid_search_with(&data, base, &cfg.plan, workers, &progress_printer(total))?;
        eprintln!(
            "{label}: best validation accuracy {:.4} ({} over budget)",
            res.ranking[0].score, res.skipped_over_budget
        );
        best.insert(label.clone(), res.best.clone());
        rankings.insert(label, res);
    }
    write_text(
        &out.join("best_config.json"),
        &(serde_json::to_string_pretty(&best).unwrap() + "\n"),
    )?;
    write_text(
        &out.join("grid_scores.json"),
        &(serde_json::to_string_pretty(&rankings).unwrap() + "\n"),
    )?;
    Ok(())
}

pub fn report(results: &Path, out: &Path, regimes: &[String]) -> CliResult<()> {
    let table = ResultTable::read_csv(results)?;
    if table.is_empty() {
        return Err(CliError::Data(format!("{} has no result rows", results.display())));
    }
    create_dir(out)?;
    let summary = write_report(&table, out)?;
    eprint!("{}", summary.to_text());
    if !regimes.is_empty() {
        let tables = regimes
            .iter()
            .map(|r| {
                let (name, path) = r
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("regime `{r}` is not NAME=PATH")))?;
                Ok((name.to_string(), ResultTable::read_csv(Path::new(path))?))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let rep = split_sensitivity_report(&tables).map_err(CliError::config)?;
        write_text(
            &out.join("sensitivity.json"),
            &(serde_json::to_string_pretty(&rep).unwrap() + "\n"),
        )?;
        eprint!("{}", rep.to_text());
    }
    Ok(())
}
