//! Parallel experiment runner and the `runs/<name>/` output layout.
//!
//! ```text
//! runs/<name>/report.json
//! runs/<name>/table.csv
//! runs/<name>/p<perm>_f<fold>/scores.csv
//! runs/<name>/p<perm>_f<fold>/weights.json + weights.bin
//! ```
//!
//! Fold directories are written as soon as each fold finishes, so a failed
//! run keeps the results of the folds that completed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use temporal_probe_core::dataset::Dataset;
use temporal_probe_core::eval::VideoEvalResult;
use temporal_probe_core::harness::{
    fold_jobs, run_fold, ComparisonTable, ExperimentConfig, FoldOutcome, RunReport,
};

use crate::format::{load_dataset, FormatError};
use crate::weights::save_weights;

pub const RUNS_DIR_ENV: &str = "TEMPORAL_PROBE_RUNS_DIR";

/// `$TEMPORAL_PROBE_RUNS_DIR`, or `runs` in the working directory.
pub fn runs_root() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Reads an experiment config. A relative `dataset` path is resolved
/// against the config file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    if !config.dataset.is_empty() && Path::new(&config.dataset).is_relative() {
        if let Some(dir) = path.parent() {
            config.dataset = dir.join(&config.dataset).to_string_lossy().into_owned();
        }
    }
    Ok(config)
}

pub fn write_scores_csv(path: &Path, results: &[VideoEvalResult]) -> Result<(), FormatError> {
    let io = |e: csv::Error| FormatError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["video_id", "kendall", "spearman", "degenerate"])
        .map_err(io)?;
    for r in results {
        w.write_record([
            r.video_id.clone(),
            r.kendall.to_string(),
            r.spearman.to_string(),
            r.degenerate.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_fold(
    dir: &Path,
    config: &ExperimentConfig,
    names: &[String],
    outcome: &FoldOutcome,
) -> Result<(), FormatError> {
    let r = &outcome.report;
    let fold_dir = dir.join(format!("p{}_f{}", r.permutation, r.fold));
    fs::create_dir_all(&fold_dir).map_err(|source| FormatError::Io {
        path: fold_dir.clone(),
        source,
    })?;
    write_scores_csv(&fold_dir.join("scores.csv"), &r.videos)?;
    save_weights(
        &fold_dir.join("weights.json"),
        &config.model,
        names,
        &outcome.best_weights,
    )
}

/// Runs all folds of `config` on `dataset` with at most `jobs` threads.
/// When `out_dir` is given, per-fold results, `report.json` and `table.csv`
/// are written there.
pub fn run_parallel(
    dataset: &Dataset,
    config: &ExperimentConfig,
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<RunReport, FormatError> {
    let start = Instant::now();
    let work = fold_jobs(dataset, config)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| FormatError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let names: Vec<String> =
        temporal_probe_core::models::ScorerModel::build(config.model.clone(), 0)?
            .parameters()
            .iter()
            .map(|p| p.name.clone())
            .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| FormatError::Io {
            path: PathBuf::new(),
            source: std::io::Error::other(e),
        })?;
    let folds = pool.install(|| {
        work.par_iter()
            .map(|(p, f, a)| {
                let outcome = run_fold(dataset, config, a, *p, *f)?;
                if let Some(dir) = out_dir {
                    write_fold(dir, config, &names, &outcome)?;
                }
                Ok(outcome.report)
            })
            .collect::<Result<Vec<_>, FormatError>>()
    })?;
    let report =
        RunReport::from_folds(config, &dataset.name, folds, start.elapsed().as_secs_f64())?;
    if let Some(dir) = out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

pub fn write_report(dir: &Path, report: &RunReport) -> Result<(), FormatError> {
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|source| FormatError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|source| FormatError::Io { path, source })?;
    let table = ComparisonTable::from_reports(std::slice::from_ref(report))?;
    let path = dir.join("table.csv");
    fs::write(&path, table.to_csv()).map_err(|source| FormatError::Io { path, source })
}

/// Loads the dataset named by the config, runs it and writes
/// `<root>/<name>/`.
pub fn run_config(
    config: &ExperimentConfig,
    jobs: usize,
    root: &Path,
) -> Result<(RunReport, PathBuf), FormatError> {
    let dataset = load_dataset(Path::new(&config.dataset))?;
    let dir = root.join(&config.name);
    let report = run_parallel(&dataset, config, jobs, Some(&dir))?;
    Ok((report, dir))
}

pub fn read_report(path: &Path) -> Result<RunReport, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}
