//! Similarity-based link prediction for undirected, unweighted networks.
//!
//! The crate scores candidate node pairs with the DCCLP index (common
//! neighbour clustering, degree and closeness, pair degree centrality and
//! third-order paths), TPSR3 and the classical CN, AA, RA, LP and Katz
//! baselines, and evaluates them with connectivity-preserving random
//! train/test splits, AUC and top-L precision.

pub mod error;
pub mod graph;
pub mod metrics;
pub mod evaluation;
pub mod similarity;
pub mod tuner;
pub mod datasets;

pub use error::{Error, Result};
pub use graph::{build_graph, Graph, NodeId, NodePair};
pub use metrics::{topology_stats, TopologyStats};
pub use similarity::{IndexKind, IndexParams, IndexScorer, PairScorer};
pub use tuner::{grid_search, tune, SearchBox, TuneOptions, TuneResult, WhiteShark};
