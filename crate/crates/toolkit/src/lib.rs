//! File formats, the parallel experiment runner, heatmap export and the
//! `temporal-probe` command line, on top of `temporal-probe-core`.

pub mod cli;
pub mod format;
pub mod heatmap;
pub mod runner;
pub mod weights;

pub use format::{load_dataset, save_dataset, FormatError};
pub use runner::{load_config, run_parallel, RUNS_DIR_ENV};
