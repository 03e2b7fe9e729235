//! Cost-driven placement of layered DAG workloads onto a heterogeneous
//! cloud, edge and end-device server pool under per-DAG deadlines.
//!
//! The crate provides the domain model, a schedule evaluator, cut-edge
//! preprocessing, HEFT-based deadline derivation, the PSO-GA optimizer and
//! Greedy/GA comparison strategies.

pub mod baselines;
pub mod evaluator;
pub mod heft;
pub mod model;
pub mod preprocess;
pub mod psoga;

pub use evaluator::{Assignment, CostBreakdown, Instance, Schedule};
pub use model::{DagWorkload, Environment};
