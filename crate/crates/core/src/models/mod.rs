//! The trainable architectures: GCN, GAT, MoNet, three GraphSAGE
//! aggregators, MLP and logistic regression. All graph models have two
//! layers; logistic regression has one.

mod context;
mod forward;
mod gradcheck;
mod params;
mod spec;

pub use context::GraphContext;
pub use forward::{build_model, forward, gat_attention, l2_penalty, l2_value, predict, ForwardPass};
pub use gradcheck::{check_gradients, training_loss, GradCheck};
pub use params::{ParamEntry, ParamRole, ParamStore};
pub use spec::{param_count, L2Scope, ModelKind, ModelSpec};
