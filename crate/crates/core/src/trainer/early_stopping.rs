/// Outcome of feeding one epoch's validation loss to [`EarlyStopping`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// New strict minimum; the caller should snapshot the weights.
    Improved,
    Continue,
    Stop,
}

/// Patience rule over 1-indexed epochs: training stops at the first epoch
/// with `epoch - best_epoch >= patience`, where `best_epoch` is the last epoch
/// whose loss was strictly below every earlier loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    epoch: usize,
    best_epoch: usize,
    best_loss: f64,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            epoch: 0,
            best_epoch: 0,
            best_loss: f64::INFINITY,
        }
    }

    pub fn observe(&mut self, loss: f64) -> StopDecision {
        self.epoch += 1;
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = self.epoch;
            // A new minimum never stops training, even with zero patience.
            return StopDecision::Improved;
        }
        if self.epoch - self.best_epoch >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// 0 until a finite loss has been seen.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }
}

/// Runs the stopping rule over a loss sequence, capped at `max_epochs`.
/// Returns `(epochs_run, best_epoch)`.
pub fn simulate_early_stopping(losses: &[f64], patience: usize, max_epochs: usize) -> (usize, usize) {
    let mut es = EarlyStopping::new(patience);
    for &l in losses.iter().take(max_epochs) {
        if es.observe(l) == StopDecision::Stop {
            break;
        }
    }
    (es.epoch(), es.best_epoch())
}
