//! Experiment harness around the `l2proj` estimation core: CSV ingestion,
//! seeded generators, train/test and prequential runs, repeated two-fold
//! cross-validation, hyperparameter search, the eigenvalue-spread study and
//! atomic result directories.

pub mod config;
pub mod cv;
pub mod data;
pub mod eigspread;
mod error;
pub mod output;
pub mod report;
pub mod run;
pub mod search;

pub use config::{Algorithm, DataSource, ExperimentConfig, Protocol};
pub use error::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "L2PROJ_OUT";

/// Output root from [`OUT_ENV`], or `runs` in the working directory.
pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUT_ENV).map(Into::into).unwrap_or_else(|| "runs".into())
}
