//! Benchmarking framework for semi-supervised transductive node
//! classification.
//!
//! The crate bundles everything a benchmark run needs: dataset containers and
//! preprocessing ([`graph`]), a small reverse-mode tensor engine
//! ([`autodiff`]), the trainable architectures ([`models`]), label
//! propagation baselines ([`propagation`]), the shared training loop
//! ([`trainer`]), split generation, grid search and aggregation metrics
//! ([`protocol`]) and result summaries ([`report`]).
//!
//! Numeric code is generic over [`Scalar`]; training uses `f32` and the
//! gradient checks re-run the same code in `f64`.

pub mod autodiff;
pub mod error;
pub mod graph;
pub mod models;
pub mod propagation;
pub mod protocol;
pub mod report;
pub mod rng;
mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Scalar;

/// Single-precision tensor used for training.
pub type Tensor32 = autodiff::Tensor<f32>;
/// Double-precision tensor used by gradient checks.
pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tape32 = autodiff::Tape<f32>;
pub type Tape64 = autodiff::Tape<f64>;
pub type ParamStore32 = models::ParamStore<f32>;
pub type ParamStore64 = models::ParamStore<f64>;
