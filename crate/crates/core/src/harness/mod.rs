//! Training paradigms, the cross-validation protocol and result tables.
//!
//! Every fold draws its randomness from `fold_seed(config.seed, p, f)`.
//! Model initialisation, dropout and batch order use one generator; training
//! shuffles and augmentation use seeds keyed by fold, epoch and video id, so
//! that disabling them leaves every other draw untouched. Test videos are
//! always scored in their original order.

mod config;
mod report;
mod table;
mod train;

pub use config::{
    strategy_title, AugmentationConfig, ExperimentConfig, Paradigm, ShuffleSchedule, SplitConfig,
    INVARIANT_BATCH_SIZE, UNSHUFFLED,
};
pub use report::{
    fold_jobs, fold_seed, run_experiment, run_fold, FoldOutcome, FoldReport, RunReport,
};
pub use table::ComparisonTable;
pub use train::{
    evaluate_split, full_video_epoch, id_hash, invariant_epoch, train_full_video, train_invariant,
    training_permutation, RunSeeds, Trainer,
};
