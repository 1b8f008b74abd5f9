use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::Result;
use crate::rng::RngStream;

use super::context::GraphContext;
use super::forward::{forward, l2_penalty};
use super::params::ParamStore;
use super::spec::ModelSpec;

/// Largest discrepancy found by [`check_gradients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Training loss (masked cross-entropy plus L2 term) with a fixed dropout
/// stream, so repeated evaluations see the same masks.
pub fn training_loss(
    spec: &ModelSpec,
    params: &ParamStore<f64>,
    graph: &GraphContext<f64>,
    mask: &[usize],
    dropout_seed: u64,
) -> Result<f64> {
    let mut tape = Tape::new();
    let mut rng = RngStream::from_seed(dropout_seed);
    let fp = forward(spec, params, graph, &mut tape, &mut rng, true)?;
    let ce = tape.masked_cross_entropy(fp.logits, &graph.labels, mask)?;
    let loss = match l2_penalty(spec, params, &mut tape, &fp.params)? {
        Some(l2) => tape.add(ce, l2)?,
        None => ce,
    };
    Ok(tape.value(loss).item())
}

/// Compares the reverse-mode gradient of [`training_loss`] with central
/// differences of step `h` for every parameter scalar. The relative error of
/// an entry is `|a - f| / max(|a|, |f|, floor)`.
pub fn check_gradients(
    spec: &ModelSpec,
    params: &ParamStore<f64>,
    graph: &GraphContext<f64>,
    mask: &[usize],
    dropout_seed: u64,
    h: f64,
    floor: f64,
) -> Result<GradCheck> {
    let mut tape = Tape::new();
    let mut rng = RngStream::from_seed(dropout_seed);
    let fp = forward(spec, params, graph, &mut tape, &mut rng, true)?;
    let ce = tape.masked_cross_entropy(fp.logits, &graph.labels, mask)?;
    let loss = match l2_penalty(spec, params, &mut tape, &fp.params)? {
        Some(l2) => tape.add(ce, l2)?,
        None => ce,
    };
    tape.backward(loss)?;
    let mut report = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    let mut probe = params.clone();
    for (k, entry) in params.entries().iter().enumerate() {
        let analytic = tape.grad_or_zeros(fp.params[k]);
        for idx in 0..entry.tensor.len() {
            let orig = entry.tensor.data()[idx];
            probe.entries_mut()[k].tensor.data_mut()[idx] = orig + h;
            let up = training_loss(spec, &probe, graph, mask, dropout_seed)?;
            probe.entries_mut()[k].tensor.data_mut()[idx] = orig - h;
            let down = training_loss(spec, &probe, graph, mask, dropout_seed)?;
            probe.entries_mut()[k].tensor.data_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                if rel >= report.max_rel_error {
                    report.worst = Some((entry.name.clone(), idx));
                }
            }
        }
    }
    Ok(report)
}
