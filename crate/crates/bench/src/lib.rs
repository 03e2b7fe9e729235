//! Benchmark harness: deadline sweeps over the offloading strategies of
//! `offload-core`, with CSV and SVG reports.

pub mod config;
pub mod experiment;
pub mod report;
pub mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Algorithm, ExperimentConfig};
pub use experiment::{run_experiment, ResultRow, ResultTable, Trial};
pub use report::emit_results;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("result table is empty")]
    EmptyTable,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] offload_core::model::ModelError),
    #[error(transparent)]
    Eval(#[from] offload_core::evaluator::EvalError),
    #[error(transparent)]
    Heft(#[from] offload_core::heft::HeftError),
    #[error(transparent)]
    Search(#[from] offload_core::psoga::PsoError),
}
