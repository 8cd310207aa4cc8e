//! Differentiable genetic programming for symbolic regression.
//!
//! Expression trees are relaxed into differentiable mixture models
//! ([`dst`]), trained by reverse-mode gradients ([`grad`]), sampled back into
//! discrete trees and diversified with genetic operators ([`sampler`]). The
//! [`engine`] module drives the whole loop under an evaluation budget and
//! also provides a canonical GP baseline.

pub mod data;
pub mod dst;
pub mod engine;
pub mod expr;
pub mod grad;
pub mod metrics;
pub mod sampler;

mod error;
pub mod seed;

pub use error::{DgpError, Result};

pub use data::{Dataset, NoiseSpec, SyntheticBenchmark, SyntheticSpec};
pub use dst::{AdjacencyMatrix, DiffSymbolicTree, InitConfig, NodeMatrix};
pub use engine::{canonical_gp_run, dgp_run, EngineConfig, RunResult};
pub use expr::{parse_tree, Caps, Primitive, PrimitiveSet, SymbolicTree};
pub use grad::{LossConfig, TrainConfig};
pub use sampler::{GeneticConfig, SampleConfig};

/// Library version, embedded in result artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
