//! Dense/sparse tensor engine with reverse-mode differentiation.
//!
//! The operator set is exactly what the models need: dense and sparse
//! products, bias addition, pointwise activations, inverted dropout, column
//! slicing/concatenation, per-edge score gathering, row and segment softmax,
//! segment max, a Gaussian log-kernel for mixture-model filters, masked
//! cross-entropy and reductions.

mod sparse;
mod tape;
mod tensor;

pub use sparse::{CsrPattern, SparseOperator};
pub use tape::{Activation, Tape, Var};
pub use tensor::{glorot_bound, glorot_init, Tensor};
