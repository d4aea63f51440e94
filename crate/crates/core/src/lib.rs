//! Fairness-aware community detection on weighted undirected graphs.
//!
//! The optimizer first finds a highly modular partition through local node
//! moves, then repeatedly aggregates communities into meta-nodes and moves
//! them under a scalarized objective that trades modularity against a
//! multi-group proportional-balance fairness score. Synthetic generators and
//! file loaders support benchmarking on both generated and real networks.

pub mod dataio;
pub mod error;
pub mod fairness;
pub mod generators;
pub mod graph;
pub mod optimizer;

pub use error::{Error, Result};
pub use fairness::{FairnessContext, FairnessMetric, GroupCounts, MoveTarget};
pub use graph::{aggregate, flatten, Graph, Partition};
pub use optimizer::{mouflon, OptimizerConfig, RunOutcome};
