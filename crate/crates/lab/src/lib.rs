//! Experiment driver for `sssplus-core`: parallel Monte Carlo, CSV and JSON
//! reports, and the `sssplus` command line.

pub mod cli;
pub mod montecarlo;
pub mod report;

pub use montecarlo::{
    confidence_interval, run_experiment, sweep_n, ExperimentConfig, FdrEstimate,
};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] sssplus_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
