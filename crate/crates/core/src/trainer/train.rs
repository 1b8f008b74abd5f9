use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::models::{build_model, forward, l2_penalty, l2_value, predict, GraphContext, ModelSpec, ParamStore};
use crate::propagation::argmax_lowest;
use crate::protocol::Split;
use crate::rng::RngStream;
use crate::scalar::Scalar;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::early_stopping::{EarlyStopping, StopDecision};

/// Training-loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self {
            max_epochs: 100_000,
            patience: 50,
            adam_beta1: a.beta1,
            adam_beta2: a.beta2,
            adam_epsilon: a.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be >= 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidArgument(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Summary of one training run. Curves are indexed by `epoch - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// 1-indexed epoch of the lowest validation loss; 0 if none was finite.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_loss_curve: Vec<f64>,
    /// Data loss plus L2 term on the validation nodes.
    pub val_loss_curve: Vec<f64>,
    pub val_acc_curve: Vec<f64>,
    /// Measured on the restored best weights.
    pub test_accuracy: f64,
    pub val_accuracy: f64,
    pub wall_seconds: f64,
    pub diverged: bool,
}

/// Fraction of `mask` nodes whose argmax logit (lowest class on ties) equals
/// the label.
pub fn accuracy<T: Scalar>(logits: &Tensor<T>, labels: &[u32], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut correct = 0usize;
    for &i in mask {
        let row: Vec<f64> = logits.row(i).iter().map(|v| v.to_f64_lossy()).collect();
        if argmax_lowest(&row) as u32 == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / mask.len() as f64)
}

/// Fraction of `mask` nodes with `predictions[i] == labels[i]`; 0 for an
/// empty mask.
pub fn accuracy_of_predictions(predictions: &[u32], labels: &[u32], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let correct = mask.iter().filter(|&&i| predictions[i] == labels[i]).count();
    correct as f64 / mask.len() as f64
}

/// Inference-mode accuracy of a parameter set over `mask`.
pub fn evaluate<T: Scalar>(
    spec: &ModelSpec,
    params: &ParamStore<T>,
    graph: &GraphContext<T>,
    mask: &[usize],
) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let logits = predict(spec, params, graph)?;
    accuracy(&logits, &graph.labels, mask)
}

/// Trains `spec` on `split` and returns the outcome.
pub fn train<T: Scalar>(
    spec: &ModelSpec,
    graph: &GraphContext<T>,
    split: &Split,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<TrainOutcome> {
    train_model(spec, graph, split, cfg, rng).map(|(o, _)| o)
}

/// As [`train`], also returning the restored parameters.
///
/// Each epoch runs one full-batch training-mode forward pass, the masked
/// cross-entropy on the training nodes plus the L2 term, backpropagation and
/// an Adam step, followed by an inference-mode validation pass. The
/// parameters with the lowest validation loss are kept and restored at the
/// end.
pub fn train_model<T: Scalar>(
    spec: &ModelSpec,
    graph: &GraphContext<T>,
    split: &Split,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<(TrainOutcome, ParamStore<T>)> {
    cfg.validate()?;
    split.validate(graph.num_nodes)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::EmptyMask);
    }
    let start = Instant::now();
    let mut init_rng = rng.fork("init");
    let mut drop_rng = rng.fork("dropout");
    let mut params: ParamStore<T> = build_model(spec, graph.num_features, graph.num_classes, &mut init_rng)?;
    let mut adam = AdamState::new(&params);
    let adam_cfg = cfg.adam();
    let mut es = EarlyStopping::new(cfg.patience);
    let mut best: Option<ParamStore<T>> = None;
    let mut diverged = false;
    let mut train_loss_curve = Vec::new();
    let mut val_loss_curve = Vec::new();
    let mut val_acc_curve = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let mut tape = Tape::new();
        let fp = match forward(spec, &params, graph, &mut tape, &mut drop_rng, true) {
            Err(Error::Diverged) => {
                diverged = true;
                break;
            }
            other => other?,
        };
        let data_loss = tape.masked_cross_entropy(fp.logits, &graph.labels, &split.train)?;
        let loss = match l2_penalty(spec, &params, &mut tape, &fp.params)? {
            Some(l2) => tape.add(data_loss, l2)?,
            None => data_loss,
        };
        let train_loss = tape.value(loss).item().to_f64_lossy();
        if !train_loss.is_finite() {
            diverged = true;
            break;
        }
        tape.backward(loss)?;
        for (entry, &v) in params.entries_mut().iter_mut().zip(&fp.params) {
            entry.tensor.grad = Some(tape.grad_or_zeros(v));
        }
        drop(tape);
        adam_step(&mut params, &mut adam, epoch as u64, spec.learning_rate, &adam_cfg);
        for e in params.entries_mut() {
            e.tensor.grad = None;
        }
        if !params.all_finite() {
            diverged = true;
            break;
        }

        let (val_loss, val_acc) = match validation(spec, &params, graph, &split.val) {
            Err(Error::Diverged) => {
                diverged = true;
                break;
            }
            other => other?,
        };
        if !val_loss.is_finite() {
            diverged = true;
            break;
        }
        train_loss_curve.push(train_loss);
        val_loss_curve.push(val_loss);
        val_acc_curve.push(val_acc);
        match es.observe(val_loss) {
            StopDecision::Improved => best = Some(params.clone()),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
        log::trace!(
            "{} epoch {epoch}: train {train_loss:.4} val {val_loss:.4} acc {val_acc:.4}",
            spec.kind
        );
    }

    let (test_accuracy, val_accuracy, restored) = match best {
        Some(p) => (
            evaluate(spec, &p, graph, &split.test).unwrap_or(0.0),
            evaluate(spec, &p, graph, &split.val)?,
            p,
        ),
        None => (0.0, 0.0, params),
    };
    let outcome = TrainOutcome {
        best_epoch: es.best_epoch(),
        epochs_run: val_loss_curve.len(),
        train_loss_curve,
        val_loss_curve,
        val_acc_curve,
        test_accuracy,
        val_accuracy,
        wall_seconds: start.elapsed().as_secs_f64(),
        diverged,
    };
    Ok((outcome, restored))
}

/// Validation loss (data loss plus L2 term) and accuracy in inference mode.
pub fn validation<T: Scalar>(
    spec: &ModelSpec,
    params: &ParamStore<T>,
    graph: &GraphContext<T>,
    mask: &[usize],
) -> Result<(f64, f64)> {
    let mut tape = Tape::new();
    let mut rng = RngStream::from_seed(0);
    let fp = forward(spec, params, graph, &mut tape, &mut rng, false)?;
    let ce = tape.masked_cross_entropy(fp.logits, &graph.labels, mask)?;
    let loss = tape.value(ce).item().to_f64_lossy() + l2_value(spec, params);
    let acc = accuracy(tape.value(fp.logits), &graph.labels, mask)?;
    Ok((loss, acc))
}
