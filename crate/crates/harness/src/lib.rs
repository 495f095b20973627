//! Experiment orchestration for the hybrid soft actor-critic: shipped
//! presets, multi-seed training with checkpoints, solver benchmarks,
//! convergence checks and learning-curve export.

pub mod bench;
pub mod config;
pub mod convergence;
pub mod curves;
pub mod error;
pub mod gradcheck;
pub mod params;
pub mod presets;
pub mod records;
pub mod run;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{ConfigError, HarnessError, Result};
