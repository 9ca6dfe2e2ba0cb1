//! Affinity-aware multitask graphs and constrained task ordering.
//!
//! Tasks share a common network trunk and split into separate branches at a
//! fixed number of branch points. This crate scores every way of grouping the
//! tasks at those branch points, prices switching between tasks on the
//! resulting graph and finds the cheapest execution order under precedence
//! and conditional constraints.

pub mod affinity;
pub mod costmodel;
pub mod error;
pub mod ordering;
pub mod par;
pub mod scoring;
pub mod taskgraph;
pub mod tradeoff;
pub mod tsplib;

pub use error::{Error, Result};
pub use par::Parallelism;
pub use scoring::{score_graph, score_graphs, Constraints, GraphScore, SolverChoice, SolverConfig};
pub use taskgraph::TaskGraph;
