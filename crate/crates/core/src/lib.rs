//! High-order common-neighbor structural features for link prediction.
//!
//! Walk-count features per order, a streaming orthogonalizer and path-based normalizer,
//! polynomial-filter weights, classic heuristics, a linear scoring head, ranking metrics,
//! redundancy diagnostics and random-graph bound evaluators.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod normalizer;
pub mod orthogonalizer;
pub mod rng;
pub mod scorer;
pub mod sparse;
pub mod state;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{Graph, Node, PairBatch, SplitResult};
