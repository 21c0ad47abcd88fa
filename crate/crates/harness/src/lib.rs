//! Experiment driver for robust transfer with side-information estimators:
//! transfer grids, value-error bound checks, convergence and scaling
//! analyses, Cramér–Rao computations and plotting.

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod crb;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod stats;

pub use config::{EstimatorEntry, ExperimentConfig, Method, RadiusSetting, Sampling};
pub use error::{HarnessError, Result};
pub use pipeline::{run_transfer_grid, Context, GridRun, RunRecord};
