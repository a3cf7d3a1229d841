//! Community detection by partial coalescence of coupled random walks.
//!
//! A random walk is built on the graph so that it mixes quickly inside
//! communities and slowly between them. Coupling-from-the-past is then run
//! backward one step at a time; sets of start states whose chains reach the
//! same time-0 state with equal visit counts to their union are merged, and
//! the intermediate partition with the lowest cost is reported.
//!
//! Modules:
//! - [`graph`]: graphs, partitions, edge-list I/O, cluster-editing cost.
//! - [`markov`]: the community walk, stationary laws, restriction to a subset.
//! - [`cftp`]: grand-coupled CFTP, backward flows, partial coalescence.
//! - [`detector`]: the critical-time merging loop.
//! - [`bench`]: generators, the pivot baseline, brute-force optimum, comparisons.

pub mod bench;
pub mod cftp;
pub mod detector;
pub mod error;
pub mod graph;
pub mod markov;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{cluster_editing_cost, parse_edge_list, Graph, Partition};
pub use markov::{
    build_community_walk, restrict, stationary, Distribution, MarkovChain, WalkConfig,
};
