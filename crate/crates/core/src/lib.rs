//! Exact simulation and verification harness for the contact process on
//! finite rooted d-ary trees.

pub mod chain;
pub mod duality;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod graph;
pub mod harris;
pub mod montecarlo;
pub mod observables;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod trajectory;
pub mod vertex_set;

pub use error::{Error, Result};
pub use graph::GraphTopology;
pub use harris::HarrisSystem;
pub use trajectory::Trajectory;
pub use vertex_set::VertexSet;

/// Comparison-walk kernel in double precision.
pub type Kernel64 = chain::ChainKernel<f64>;
/// Comparison-walk kernel in single precision.
pub type Kernel32 = chain::ChainKernel<f32>;
