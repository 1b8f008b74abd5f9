//! Full-batch Adam training with patience-based early stopping and
//! restoration of the best validation-loss weights.

mod adam;
mod early_stopping;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use early_stopping::{simulate_early_stopping, EarlyStopping, StopDecision};
pub use train::{
    accuracy, accuracy_of_predictions, evaluate, train, train_model, validation, TrainConfig, TrainOutcome,
};
