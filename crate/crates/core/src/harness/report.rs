use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Paradigm};
use super::train::{evaluate_split, full_video_epoch, invariant_epoch, RunSeeds, Trainer};
use crate::dataset::{generate_splits, Dataset, FoldAssignment, VideoRecord};
use crate::eval::VideoEvalResult;
use crate::models::ScorerModel;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result, Tensor};

/// Best test-set epoch of one (permutation, fold) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub permutation: usize,
    pub fold: usize,
    pub seed: u64,
    pub best_kendall: f64,
    pub best_spearman: f64,
    /// 1-based epoch with the highest mean test Kendall (first on ties).
    pub best_epoch: usize,
    /// Mean test Kendall after every epoch.
    pub epoch_kendall: Vec<f64>,
    pub epoch_loss: Vec<f64>,
    pub videos: Vec<VideoEvalResult>,
}

impl FoldReport {
    pub fn degenerate_videos(&self) -> usize {
        self.videos.iter().filter(|v| v.degenerate).count()
    }
}

/// A fold report together with the parameters of its best epoch.
#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub report: FoldReport,
    pub best_weights: Vec<Tensor>,
}

/// Seed of fold `fold` in permutation `permutation`.
pub fn fold_seed(global: u64, permutation: usize, fold: usize) -> u64 {
    derive_seed(global, &[permutation as u64, fold as u64])
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn resolve<'a>(dataset: &'a Dataset, ids: &[String]) -> Result<Vec<&'a VideoRecord>> {
    ids.iter().map(|id| dataset.video(id)).collect()
}

/// Trains one model on a fold and evaluates it on the untouched test videos
/// after every epoch, keeping the epoch with the best mean Kendall.
pub fn run_fold(
    dataset: &Dataset,
    config: &ExperimentConfig,
    assignment: &FoldAssignment,
    permutation: usize,
    fold: usize,
) -> Result<FoldOutcome> {
    config.validate()?;
    if config.model.input_dim != dataset.feature_dim {
        return Err(Error::DatasetMismatch(
            alloc::format!("model input_dim {}", config.model.input_dim),
            alloc::format!("dataset feature_dim {}", dataset.feature_dim),
        ));
    }
    let train = resolve(dataset, &assignment.train)?;
    let test = resolve(dataset, &assignment.test)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Empty("fold split"));
    }
    let seed = fold_seed(config.seed, permutation, fold);
    let seeds = RunSeeds::from_fold_seed(seed);
    let mut model = ScorerModel::build(config.model.clone(), seeds.init)?;
    let trainer = Trainer::from_config(config);
    let mut rng = seeded(seeds.train);

    // (kendall, spearman, 1-based epoch, per-video results, weights)
    type Best = (f64, f64, usize, Vec<VideoEvalResult>, Vec<Tensor>);
    let mut best: Option<Best> = None;
    let mut epoch_kendall = Vec::with_capacity(config.epochs);
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let loss = match config.paradigm {
            Paradigm::InvariantFrameBatch => invariant_epoch(
                &mut model,
                &trainer,
                &train,
                config.effective_batch_size(),
                &mut rng,
            )?,
            Paradigm::FullVideo => {
                full_video_epoch(&mut model, &trainer, &train, config, seed, epoch, &mut rng)?
            }
        };
        let results = evaluate_split(&model, &test, dataset.style)?;
        let kendall = mean(results.iter().map(|r| r.kendall));
        let spearman = mean(results.iter().map(|r| r.spearman));
        epoch_kendall.push(kendall);
        epoch_loss.push(loss);
        if best.as_ref().is_none_or(|b| kendall > b.0) {
            let weights = model.parameters().iter().map(|p| p.value.clone()).collect();
            best = Some((kendall, spearman, epoch + 1, results, weights));
        }
    }
    let (best_kendall, best_spearman, best_epoch, videos, best_weights) = best.ok_or(
        Error::InvalidConfig(String::from("epochs must be at least 1")),
    )?;
    Ok(FoldOutcome {
        report: FoldReport {
            permutation,
            fold,
            seed,
            best_kendall,
            best_spearman,
            best_epoch,
            epoch_kendall,
            epoch_loss,
            videos,
        },
        best_weights,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub dataset: String,
    pub model: String,
    pub perturbation: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    /// Mean of `folds[*].best_kendall`.
    pub aggregate_kendall: f64,
    pub aggregate_spearman: f64,
    pub degenerate_videos: usize,
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// Aggregates fold reports; folds are sorted by (permutation, fold).
    pub fn from_folds(
        config: &ExperimentConfig,
        dataset_name: &str,
        mut folds: Vec<FoldReport>,
        wall_clock_secs: f64,
    ) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Empty("run report folds"));
        }
        folds.sort_by_key(|f| (f.permutation, f.fold));
        Ok(Self {
            name: config.name.clone(),
            dataset: String::from(dataset_name),
            model: config.model.label(),
            perturbation: config.perturbation_label(),
            seed: config.seed,
            config: config.clone(),
            aggregate_kendall: mean(folds.iter().map(|f| f.best_kendall)),
            aggregate_spearman: mean(folds.iter().map(|f| f.best_spearman)),
            degenerate_videos: folds.iter().map(FoldReport::degenerate_videos).sum(),
            folds,
            wall_clock_secs,
        })
    }
}

/// All (permutation, fold) jobs of an experiment, in protocol order.
pub fn fold_jobs(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<Vec<(usize, usize, FoldAssignment)>> {
    config.validate()?;
    let plan = generate_splits(
        dataset,
        config.splits.seed,
        config.splits.permutations,
        config.splits.folds,
    )?;
    Ok(plan
        .assignments
        .into_iter()
        .enumerate()
        .flat_map(|(p, folds)| folds.into_iter().enumerate().map(move |(f, a)| (p, f, a)))
        .collect())
}

/// Runs every fold serially. The wall clock is left at zero; callers with a
/// clock fill it in.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<RunReport> {
    let folds = fold_jobs(dataset, config)?
        .into_iter()
        .map(|(p, f, a)| run_fold(dataset, config, &a, p, f).map(|o| o.report))
        .collect::<Result<Vec<_>>>()?;
    RunReport::from_folds(config, &dataset.name, folds, 0.0)
}
