//! Order-based nonlinear causal structure learning.
//!
//! The pipeline estimates a topological order with score matching
//! ([`ordering`]), then prunes the fully connected DAG induced by the order
//! with a sparse additive model: each candidate parent is embedded by an
//! ensemble of completely randomized single-variable trees ([`embed`]) and a
//! group lasso ([`grouplasso`]) keeps or drops it as a whole ([`prune`]).
//! [`synthgen`] and [`graph`] supply synthetic benchmarks and accuracy
//! metrics; [`runner`] wires everything into reproducible experiments.

pub mod data;
pub mod embed;
pub mod error;
pub mod graph;
pub mod grouplasso;
pub mod ordering;
pub mod prune;
pub mod runner;
pub mod seed;
pub mod synthgen;

pub use data::Dataset;
pub use error::{Error, Result};
pub use graph::{Dag, TopologicalOrder};
