//! From-scratch sparse graph attention network with edge-featured message
//! passing: CSR graph storage, dense NN primitives with hand-written
//! backward passes, the attention/propagation/aggregation layer, a
//! full-graph AdamW trainer with ROC-AUC evaluation, and CSV dataset
//! ingestion plus a planted-signal synthetic generator.
//!
//! All numeric kernels are generic over the [`Scalar`] type; `f64` is the
//! default lane (and the one the gradient tolerances are calibrated for),
//! with `*32` aliases exposed for single precision.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod baselines;
pub mod checkpoint;
pub mod data;
mod dense;
mod error;
pub mod gradcheck;
mod graph;
pub mod layer;
pub mod metrics;
mod nn;
mod rng;
mod scalar;
pub mod trainer;

pub use dense::{concat_cols, split_cols, DenseMatrix};
pub use error::{Error, Result};
pub use graph::{build_graph, CsrGraph};
pub use layer::{GipaLayerParams, GipaModel, LayerConfig, ModelConfig};
pub use nn::{AdamW, Mlp, MlpSpec, Parameter};
pub use rng::SeededRng;
pub use scalar::Scalar;
pub use trainer::TrainConfig;

/// Single-precision aliases of the core types (default scalar is `f64`).
pub type DenseMatrix32 = DenseMatrix<f32>;
pub type CsrGraph32 = CsrGraph<f32>;
pub type Parameter32 = Parameter<f32>;
pub type GipaModel32 = GipaModel<f32>;
