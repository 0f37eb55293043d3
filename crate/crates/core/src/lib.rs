//! Topology attacks on attributed graphs and detection of the nodes they
//! target.
//!
//! The pipeline is: build or load a [`Graph`], train the linear
//! [`SurrogateModel`] (`softmax(Â²XW)`), poison the graph with one of the
//! [`attack`] routines, then rank nodes with the neighborhood-variance
//! [`detect`]or or one of the [`baselines`]. The [`harness`] module wires this
//! into reproducible experiments scored by AUC.

pub mod attack;
pub mod baselines;
pub mod detect;
mod error;
pub mod graph;
pub mod harness;
pub mod seed;
pub mod surrogate;

pub use attack::{apply_flips, AttackKind, Flip, FlipOp, Perturbation, PoisonedGraph};
pub use detect::{detect, DetectParams, DetectionResult, Variant};
pub use error::{Error, Result};
pub use graph::{Graph, NormalizedAdjacency, SbmConfig, Split};
pub use surrogate::{SurrogateModel, TrainConfig};
